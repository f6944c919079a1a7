"""Command-line interface.

Subcommands: ``params`` (attack phase lengths), ``run`` (experiment from a
JSON config), ``sweep`` (re-run a config across horizons), ``ingest``
(ratings file -> profile file). Flags override config-file values. The
default output directory comes from --output-dir, then $OLTRSIM_OUT, then
the working directory. Exit codes: 0 success, 1 validation error, 2 I/O
error.

Config schema (JSON object; see README for the full field list)::

    {
      "model": "cascade",            # or "pbm"
      "profile": "movielens10",      # builtin name, file path, or [weights]
      "k": 3, "horizon": 500000, "alpha": 1.5,
      "attack": "cascade-ofa",       # none|cascade-ofa|pbm-ofa|cascade-atq|pbm-atq
      "targets": [4, 7, 10],
      "threshold": 0.08,             # suppression level for attack schedules
      "attack_budget": null,         # attack-then-quit override
      "bias": [0.95, 0.90, 0.85],    # required for pbm
      "runs": 50, "master_seed": 0,
      "engine": "fast", "grid_points": 200
    }
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import data_ingest
from .attacks import cascade_ofa_params, derive_cascade_threshold, pbm_ofa_params
from .core import AttractionProfile, PositionBias, ValidationError
from .harness import ExperimentConfig, run_many
from .reports import (
    write_curve_csv,
    write_manifest,
    write_summary_csv,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

OUTPUT_ENV_VAR = "OLTRSIM_OUT"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oltrsim",
        description="Click-feedback bandit simulator with reward-poisoning attacks",
    )
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("params", help="compute attack phase lengths")
    p.add_argument("--model", choices=["cascade", "pbm"], required=True)
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("-K", "--list-size", type=int, required=True, dest="k")
    p.add_argument("-L", "--items", type=int, required=True, dest="n_items")
    p.add_argument("--threshold", type=float, help="suppression level")
    p.add_argument(
        "--min-weight",
        type=float,
        help="derive the threshold from a lower bound on the target weights",
    )
    p.add_argument("--epsilon", type=float, help="shrink factor for --min-weight")
    p.add_argument("--bias", type=_floats, help="comma-separated position bias (pbm)")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("config", type=Path)
    p.add_argument("--output-dir", type=Path, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--master-seed", type=int, default=None)
    p.add_argument("--engine", choices=["fast", "reference"], default=None)
    p.add_argument("--workers", type=int, default=0, help="0 = all cores")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="re-run a config across horizons")
    p.add_argument("config", type=Path)
    p.add_argument("--horizons", type=_ints, required=True)
    p.add_argument("--output-dir", type=Path, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--master-seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ingest", help="derive a profile file from ratings data")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ratings", type=Path, help="ratings file to parse")
    src.add_argument(
        "--builtin",
        choices=data_ingest.builtin_profile_names(),
        help="write a built-in profile instead of parsing",
    )
    p.add_argument(
        "--format",
        choices=[data_ingest.FORMAT_LEGACY, data_ingest.FORMAT_CSV],
        default=data_ingest.FORMAT_LEGACY,
    )
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("-L", "--items", type=int, default=10, dest="n_items")
    p.add_argument("--threshold", type=float, default=3.0, help="rating cut (strict)")
    p.add_argument("--min-count", type=int, default=20)
    p.add_argument(
        "--mode",
        choices=[
            data_ingest.SELECT_GIVEN,
            data_ingest.SELECT_TOP_VARIANCE,
            data_ingest.SELECT_SEEDED,
        ],
        default=data_ingest.SELECT_TOP_VARIANCE,
    )
    p.add_argument("--movie-ids", type=_ints, default=())
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    return parser


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x)


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in str(text).split(",") if x)


def cmd_params(args) -> int:
    threshold = args.threshold
    if threshold is None:
        if args.min_weight is None or args.epsilon is None:
            raise ValidationError(
                "supply --threshold, or both --min-weight and --epsilon"
            )
        threshold = derive_cascade_threshold(args.min_weight, args.k, args.epsilon)
        print(f"threshold={threshold}")
    if args.model == "cascade":
        schedule = cascade_ofa_params(
            args.alpha, args.horizon, args.k, args.n_items, threshold
        )
    else:
        if not args.bias:
            raise ValidationError("pbm params need --bias")
        schedule = pbm_ofa_params(
            args.alpha, args.horizon, args.k, args.n_items,
            PositionBias(args.bias), threshold,
        )
    for key, value in schedule.as_dict().items():
        print(f"{key}={value}")
    return EXIT_OK


def _resolve_output_dir(cli_value: Path | None) -> Path:
    if cli_value is not None:
        out = cli_value
    elif os.environ.get(OUTPUT_ENV_VAR):
        out = Path(os.environ[OUTPUT_ENV_VAR])
    else:
        out = Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_config(path: Path, overrides: dict | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file plus flag overrides."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})

    profile = _resolve_profile(raw.get("profile", "movielens10"), path.parent)
    bias = raw.get("bias")
    known = {
        "model", "profile", "k", "horizon", "alpha", "ranker", "attack", "bias",
        "targets", "threshold", "attack_budget", "runs", "master_seed", "engine",
        "regret_mode", "grid_points",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(
        model=raw.get("model", "cascade"),
        profile=profile,
        k=int(raw.get("k", 3)),
        horizon=int(raw.get("horizon", 10000)),
        alpha=float(raw.get("alpha", 1.5)),
        ranker=raw.get("ranker", ""),
        attack=raw.get("attack", "none"),
        bias=PositionBias(tuple(bias)) if bias else None,
        targets=tuple(raw.get("targets", ())),
        threshold=raw.get("threshold"),
        attack_budget=raw.get("attack_budget"),
        runs=int(raw.get("runs", 1)),
        master_seed=int(raw.get("master_seed", 0)),
        engine=raw.get("engine", "fast"),
        regret_mode=raw.get("regret_mode", "expected"),
        grid_points=int(raw.get("grid_points", 200)),
    )


def _resolve_profile(spec, base_dir: Path) -> AttractionProfile:
    if isinstance(spec, list):
        return AttractionProfile(weights=tuple(float(w) for w in spec))
    if isinstance(spec, str):
        if spec in data_ingest.builtin_profile_names():
            return data_ingest.builtin_profile(spec)
        candidate = Path(spec)
        if not candidate.is_absolute():
            candidate = base_dir / candidate
        if candidate.exists():
            return data_ingest.read_profile(candidate)
        raise ValidationError(
            f"profile {spec!r} is neither a built-in name nor an existing file"
        )
    raise ValidationError("profile must be a name, a file path, or a weight list")


def _effective_workers(requested: int) -> int:
    if requested and requested > 0:
        return requested
    return os.cpu_count() or 1


def cmd_run(args) -> int:
    config = load_config(
        args.config,
        {
            "runs": args.runs,
            "horizon": args.horizon,
            "master_seed": args.master_seed,
            "engine": args.engine,
        },
    )
    out = _resolve_output_dir(args.output_dir)
    summary = run_many(config, workers=_effective_workers(args.workers))
    mid = write_manifest(out / "manifest.json", summary)
    write_summary_csv(out / "summary.csv", summary, mid)
    write_curve_csv(out / "curve.csv", summary, mid)
    print(
        f"runs={config.runs} mean_final_regret={summary.mean_final_regret:.6g} "
        f"std={summary.std_final_regret:.6g} budget={summary.budget} "
        f"success_runs={summary.success_runs} manifest={mid}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.horizons:
        raise ValidationError("sweep needs at least one horizon")
    base = load_config(
        args.config, {"runs": args.runs, "master_seed": args.master_seed}
    )
    out = _resolve_output_dir(args.output_dir)
    workers = _effective_workers(args.workers)
    rows = []
    mid = None
    for horizon in args.horizons:
        config = ExperimentConfig(
            **{
                **{f: getattr(base, f) for f in base.__dataclass_fields__},
                "horizon": int(horizon),
            }
        )
        summary = run_many(config, workers=workers)
        if mid is None:
            mid = write_manifest(out / "manifest.json", summary)
        rows.append(
            {
                "horizon": int(horizon),
                "mean_final_regret": summary.mean_final_regret,
                "std_final_regret": summary.std_final_regret,
                "manipulated_rounds": summary.results[0].manipulated_rounds,
                "budget": summary.budget,
            }
        )
        print(
            f"horizon={horizon} mean_final_regret={summary.mean_final_regret:.6g} "
            f"budget={summary.budget}"
        )
    write_sweep_csv(out / "sweep.csv", rows, mid)
    return EXIT_OK


def cmd_ingest(args) -> int:
    if args.builtin:
        profile = data_ingest.builtin_profile(args.builtin)
        data_ingest.write_profile(args.out, profile)
        print(f"wrote {args.out} ({profile.size} items, built-in {args.builtin})")
        return EXIT_OK
    table = data_ingest.parse_movielens(args.ratings, args.format)
    probs = data_ingest.attraction_probs(
        table, threshold=args.threshold, min_count=args.min_count
    )
    profile, source_ids = data_ingest.select_profile(
        probs, args.n_items, mode=args.mode, seed=args.seed, movie_ids=args.movie_ids
    )
    data_ingest.write_profile(args.out, profile, source_ids)
    print(
        f"wrote {args.out} ({profile.size} items from {len(table)} ratings, "
        f"{table.skipped} malformed rows skipped)"
    )
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
