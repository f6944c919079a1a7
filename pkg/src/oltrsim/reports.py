"""Run artifacts: manifest, summary CSV, regret-curve CSV, sweep CSV.

All CSVs are bit-stable: dot-decimal floats via Python's shortest-repr,
no thousands separators, header row first, "\\n"-terminated rows. Each CSV
carries the id of the manifest that produced it; the id is a digest of the
resolved inputs (not of timestamps), so re-running the same experiment
rewrites byte-identical CSVs.

Schemas
-------
summary.csv: manifest_id, seed, final_regret, target_coverage,
    manipulated_rounds, then one rec_count_<item> column per item.
    ``seed`` is the run index; streams derive from (master_seed, seed).
curve.csv: manifest_id, round, mean_cum_regret, std_cum_regret.
sweep.csv: manifest_id, horizon, mean_final_regret, std_final_regret,
    manipulated_rounds, budget.
manifest.json: resolved configuration, schedule constants, RNG contract,
    package version, timestamps, and the id.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import RNG_ALGORITHM
from .harness import ExperimentConfig, ExperimentSummary


def config_payload(config: ExperimentConfig) -> dict:
    """JSON-serializable resolved configuration."""
    payload = asdict(config)
    payload["profile"] = {
        "items": list(config.profile.items),
        "weights": list(config.profile.weights),
    }
    payload["bias"] = list(config.bias.p) if config.bias else None
    payload["targets"] = list(config.targets)
    return payload


def manifest_id(config: ExperimentConfig, schedule: dict | None, budget: int) -> str:
    """Deterministic digest of everything that shapes the outputs."""
    body = {
        "config": config_payload(config),
        "schedule": schedule,
        "budget": budget,
        "rng": RNG_ALGORITHM,
        "version": __version__,
    }
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_manifest(path: str | Path, summary: ExperimentSummary) -> str:
    """Write manifest.json next to the CSVs; returns the manifest id."""
    mid = manifest_id(summary.config, summary.schedule, summary.budget)
    body = {
        "id": mid,
        "config": config_payload(summary.config),
        "schedule": summary.schedule,
        "budget": summary.budget,
        "rng": {
            "algorithm": RNG_ALGORITHM,
            "stream_rule": "SeedSequence([master_seed, run_index, role]); "
            "role 0=environment, 1=adversary, 2=auxiliary",
        },
        "version": __version__,
        "written_at": datetime.now(timezone.utc).isoformat(),
    }
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return mid


def write_summary_csv(path: str | Path, summary: ExperimentSummary, mid: str) -> None:
    items = summary.config.profile.items
    header = [
        "manifest_id",
        "seed",
        "final_regret",
        "target_coverage",
        "manipulated_rounds",
    ] + [f"rec_count_{a}" for a in items]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in summary.results:
            writer.writerow(
                [
                    mid,
                    r.run_index,
                    str(r.final_regret),
                    str(r.target_coverage),
                    r.manipulated_rounds,
                ]
                + list(r.rec_counts)
            )


def write_curve_csv(path: str | Path, summary: ExperimentSummary, mid: str) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["manifest_id", "round", "mean_cum_regret", "std_cum_regret"])
        for rnd, mean, std in zip(
            summary.curve_rounds, summary.curve_mean, summary.curve_std
        ):
            writer.writerow([mid, rnd, str(mean), str(std)])


def write_sweep_csv(path: str | Path, rows: list[dict], mid: str) -> None:
    header = [
        "manifest_id",
        "horizon",
        "mean_final_regret",
        "std_final_regret",
        "manipulated_rounds",
        "budget",
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    mid,
                    row["horizon"],
                    str(row["mean_final_regret"]),
                    str(row["std_final_regret"]),
                    row["manipulated_rounds"],
                    row["budget"],
                ]
            )


def write_event_log_csv(path: str | Path, rows) -> None:
    """Debug event log from a reference-engine run (one row per round)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "list", "exam", "clicks", "manipulated", "regret_delta"])
        for row in rows:
            writer.writerow(
                [
                    row.t,
                    " ".join(str(a) for a in row.listed),
                    "".join(str(e) for e in row.exam),
                    "".join(str(c) for c in row.clicks),
                    int(row.manipulated),
                    str(row.regret_delta),
                ]
            )
