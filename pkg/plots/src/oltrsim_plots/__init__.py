"""Chart rendering for oltrsim experiment CSVs."""

__version__ = "0.1.0"

from .charts import (
    PlotSpec,
    SchemaError,
    plot_rec_counts,
    plot_regret_curves,
    read_curve,
    read_summary,
    rec_count_series,
    render,
)

__all__ = [
    "PlotSpec",
    "SchemaError",
    "plot_rec_counts",
    "plot_regret_curves",
    "read_curve",
    "read_summary",
    "rec_count_series",
    "render",
]
