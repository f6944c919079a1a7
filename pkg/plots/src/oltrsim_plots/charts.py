"""Render charts from oltrsim CSV outputs, without recomputation.

Two chart kinds: grouped per-item recommendation-count bars comparing an
attack run against a no-attack run (promoted items highlighted), and
cumulative-regret curves with a mean ± stddev band per strategy. Inputs are
the documented summary.csv / curve.csv schemas; this package never imports
the simulator and never mutates its inputs, so charts can be re-rendered at
any time against old experiment directories.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REC_COUNTS = "rec-counts"
REGRET_CURVES = "regret-curves"

SUMMARY_REQUIRED = ("manifest_id", "seed", "final_regret", "manipulated_rounds")
CURVE_REQUIRED = ("manifest_id", "round", "mean_cum_regret", "std_cum_regret")


class SchemaError(ValueError):
    """An input CSV does not match the documented schema."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: chart kind, input CSVs, labels, output image path."""

    kind: str
    inputs: tuple[Path, ...]
    labels: tuple[str, ...]
    output: Path
    targets: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in (REC_COUNTS, REGRET_CURVES):
            raise SchemaError(f"unknown chart kind {self.kind!r}")
        if self.kind == REC_COUNTS and len(self.inputs) != 2:
            raise SchemaError("rec-counts takes exactly two summary CSVs")
        if not self.inputs:
            raise SchemaError("no input CSVs")


@dataclass(frozen=True)
class SummaryTable:
    """Parsed summary.csv: per-run rows plus the per-item count columns."""

    items: tuple[int, ...]
    rec_counts: np.ndarray  # runs x items
    final_regret: np.ndarray


@dataclass(frozen=True)
class CurveTable:
    rounds: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def _read_rows(path: Path, required: tuple[str, ...]) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for column in required:
            if column not in fields:
                raise SchemaError(f"{path}: missing column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_summary(path: Path) -> SummaryTable:
    rows = _read_rows(path, SUMMARY_REQUIRED)
    count_columns = [c for c in rows[0] if c.startswith("rec_count_")]
    if not count_columns:
        raise SchemaError(f"{path}: missing column 'rec_count_<item>'")
    items = tuple(sorted(int(c.removeprefix("rec_count_")) for c in count_columns))
    counts = np.array(
        [[float(row[f"rec_count_{a}"]) for a in items] for row in rows]
    )
    finals = np.array([float(row["final_regret"]) for row in rows])
    return SummaryTable(items=items, rec_counts=counts, final_regret=finals)


def read_curve(path: Path) -> CurveTable:
    rows = _read_rows(path, CURVE_REQUIRED)
    return CurveTable(
        rounds=np.array([int(row["round"]) for row in rows]),
        mean=np.array([float(row["mean_cum_regret"]) for row in rows]),
        std=np.array([float(row["std_cum_regret"]) for row in rows]),
    )


def rec_count_series(
    attack: SummaryTable, baseline: SummaryTable
) -> tuple[tuple[int, ...], np.ndarray, np.ndarray]:
    """Mean per-item recommendation counts for the two runs.

    Both summaries must cover the same item universe.
    """
    if attack.items != baseline.items:
        raise SchemaError(
            f"item universes differ: {attack.items} vs {baseline.items}"
        )
    return attack.items, attack.rec_counts.mean(axis=0), baseline.rec_counts.mean(axis=0)


def plot_rec_counts(
    attack_csv: Path,
    baseline_csv: Path,
    output: Path,
    targets: tuple[int, ...] = (),
    labels: tuple[str, str] = ("with attack", "no attack"),
) -> Path:
    """Grouped bars of mean recommendations per item, attack vs baseline."""
    items, attack_mean, base_mean = rec_count_series(
        read_summary(attack_csv), read_summary(baseline_csv)
    )
    x = np.arange(len(items))
    width = 0.38

    fig, ax = plt.subplots(figsize=(8, 4.5))
    bars = ax.bar(x - width / 2, attack_mean, width, label=labels[0], color="#d62728")
    ax.bar(x + width / 2, base_mean, width, label=labels[1], color="#7f7f7f")
    for item, patch in zip(items, bars.patches):
        if item in targets:
            patch.set_hatch("//")
            patch.set_edgecolor("black")
    ax.set_xticks(x, [str(a) for a in items])
    ax.set_xlabel("item")
    ax.set_ylabel("mean recommendations")
    if targets:
        ax.set_title(f"promoted items: {', '.join(str(a) for a in targets)} (hatched)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(output)
    plt.close(fig)
    return Path(output)


def plot_regret_curves(
    curve_csvs: tuple[Path, ...],
    labels: tuple[str, ...],
    output: Path,
) -> Path:
    """One mean-regret line per strategy with a ± stddev band.

    All curves must share an identical round grid.
    """
    if len(curve_csvs) != len(labels):
        raise SchemaError(
            f"{len(curve_csvs)} curve files but {len(labels)} labels"
        )
    curves = [read_curve(path) for path in curve_csvs]
    base = curves[0].rounds
    for path, curve in zip(curve_csvs[1:], curves[1:]):
        if not np.array_equal(curve.rounds, base):
            raise SchemaError(f"{path}: round grid differs from {curve_csvs[0]}")

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for curve, label in zip(curves, labels):
        ax.plot(curve.rounds, curve.mean, label=label)
        ax.fill_between(
            curve.rounds,
            curve.mean - curve.std,
            curve.mean + curve.std,
            alpha=0.25,
        )
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.legend()
    fig.tight_layout()
    fig.savefig(output)
    plt.close(fig)
    return Path(output)


def render(spec: PlotSpec) -> Path:
    if spec.kind == REC_COUNTS:
        return plot_rec_counts(
            spec.inputs[0],
            spec.inputs[1],
            spec.output,
            targets=spec.targets,
            labels=(spec.labels + ("with attack", "no attack"))[:2],
        )
    return plot_regret_curves(spec.inputs, spec.labels, spec.output)
