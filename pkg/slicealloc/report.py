"""
Sweep output: one CSV row per record and one SVG line chart per metric.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import METHODS, SweepRecord, mean_by_tenants  # noqa: E402

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "method",
    "tenants",
    "replication",
    "total_cost",
    "beta",
    "power_w",
    "acceptance_ratio",
    "rejected",
    "wall_ms",
    "collapse",
    "time_limited",
)

# figure name: (record attribute, y axis label)
FIGURES = {
    "cost": ("total_cost", "Overall cost"),
    "acceptance": ("acceptance_ratio", "Acceptance ratio"),
    "rejected": ("rejected", "Rejected slice requests"),
    "beta": ("beta", "Bandwidth cost units"),
    "time": ("wall_ms", "Execution time (ms)"),
}


def _number(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.10g}"


def csv_row(record: SweepRecord) -> list[str]:
    return [
        record.method,
        str(record.tenants),
        str(record.replication),
        _number(record.total_cost),
        _number(record.beta),
        _number(record.power_w),
        _number(record.acceptance_ratio),
        str(record.rejected),
        f"{record.wall_ms:.3f}",
        str(int(record.collapse)),
        str(int(record.time_limited)),
    ]


def emit_csv(records: Sequence[SweepRecord], path: Path) -> Path:
    if not records:
        raise ValueError("no sweep records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in sorted(records, key=lambda r: r.sort_key):
            writer.writerow(csv_row(record))
    logger.info("wrote %d rows to %s", len(records), path)
    return path


def emit_svg(records: Sequence[SweepRecord], figure: str, path: Path) -> Path:
    if not records:
        raise ValueError("no sweep records to plot")
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}, choose one of {', '.join(FIGURES)}")
    metric, label = FIGURES[figure]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    plt.rcParams["svg.hashsalt"] = "slicealloc"
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, marker in zip(METHODS, ("o", "s")):
        tenants, means = mean_by_tenants(records, method, metric)
        if tenants:
            ax.plot(tenants, means, f"-{marker}", label=method)
    ax.set_xlabel("Number of tenants")
    ax.set_ylabel(label)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s figure to %s", figure, path)
    return path


def emit_all(records: Sequence[SweepRecord], out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    written = [emit_csv(records, out_dir / "sweep.csv")]
    for figure in FIGURES:
        written.append(emit_svg(records, figure, out_dir / f"{figure}.svg"))
    return written
