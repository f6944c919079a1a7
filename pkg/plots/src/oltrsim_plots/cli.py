"""Standalone chart renderer for oltrsim CSV outputs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .charts import SchemaError, plot_rec_counts, plot_regret_curves


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oltrsim-plots",
        description="Render charts from oltrsim summary/curve CSVs",
    )
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("rec-counts", help="grouped per-item recommendation bars")
    p.add_argument("--attack", type=Path, required=True, help="summary.csv with attack")
    p.add_argument("--baseline", type=Path, required=True, help="summary.csv without")
    p.add_argument("--targets", type=_ints, default=())
    p.add_argument("--labels", type=_strs, default=("with attack", "no attack"))
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_rec_counts)

    p = sub.add_parser("regret-curves", help="mean regret lines with stddev bands")
    p.add_argument("--curves", type=_paths, required=True, help="comma-separated CSVs")
    p.add_argument("--labels", type=_strs, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_regret_curves)

    args = parser.parse_args(argv)
    try:
        path = args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def _strs(text) -> tuple[str, ...]:
    if isinstance(text, tuple):
        return text
    return tuple(x for x in str(text).split(",") if x)


def _paths(text: str) -> tuple[Path, ...]:
    return tuple(Path(x) for x in text.split(",") if x)


def _rec_counts(args) -> Path:
    labels = (tuple(args.labels) + ("with attack", "no attack"))[:2]
    return plot_rec_counts(
        args.attack, args.baseline, args.out, targets=args.targets, labels=labels
    )


def _regret_curves(args) -> Path:
    return plot_regret_curves(tuple(args.curves), tuple(args.labels), args.out)


if __name__ == "__main__":
    raise SystemExit(main())
