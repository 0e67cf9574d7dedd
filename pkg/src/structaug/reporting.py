"""Delimited and graphical views of evaluation results and dataset stats.

Every writer here is deterministic: same inputs, byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import KINDS, SegmentationReport
from .pipeline import N_COL_BINS, N_ROW_BINS, ROW_BIN_NAMES

CSV_HEADER = (
    "table",
    "kind",
    "gtCount",
    "correct",
    "overSeg",
    "underSeg",
    "correctPct",
    "overPct",
    "underPct",
)


def report_csv_bytes(
    per_table: Mapping[str, SegmentationReport], aggregate: SegmentationReport
) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for table_id in sorted(per_table):
        for kind in KINDS:
            k = per_table[table_id].kind(kind)
            writer.writerow(
                (
                    table_id,
                    kind,
                    k.gt_count,
                    k.correct,
                    k.over_seg,
                    k.under_seg,
                    f"{k.correct_pct:.2f}",
                    f"{k.over_pct:.2f}",
                    f"{k.under_pct:.2f}",
                )
            )
    for kind in KINDS:
        k = aggregate.kind(kind)
        writer.writerow(
            (
                "ALL",
                kind,
                k.gt_count,
                k.correct,
                k.over_seg,
                k.under_seg,
                f"{k.correct_pct:.2f}",
                f"{k.over_pct:.2f}",
                f"{k.under_pct:.2f}",
            )
        )
    return buffer.getvalue().encode("utf-8")


def render_metrics_figure(aggregate: SegmentationReport, path: Path | str) -> None:
    """Grouped bars: correct / over / under percentage per segment kind."""
    labels = [kind.capitalize() for kind in KINDS]
    correct = [aggregate.kind(k).correct_pct for k in KINDS]
    over = [aggregate.kind(k).over_pct for k in KINDS]
    under = [aggregate.kind(k).under_pct for k in KINDS]

    x = np.arange(len(labels))
    width = 0.27
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(x - width, correct, width, label="Correct", color="#2a7e43")
    ax.bar(x, over, width, label="Over-segmented", color="#d9a23d")
    ax.bar(x + width, under, width, label="Under-segmented", color="#b5443c")
    ax.set_xticks(x, labels)
    ax.set_ylabel("% of ground-truth segments")
    ax.set_ylim(0, 105)
    ax.legend(loc="upper right")
    ax.set_title("Segmentation quality")
    for i, v in enumerate(correct):
        ax.annotate(f"{v:.1f}", (x[i] - width, v), ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def render_grid_heatmap(grid: np.ndarray, title: str, path: Path | str) -> None:
    """5x4 category grid as an annotated heatmap."""
    fig, ax = plt.subplots(figsize=(4.4, 4.6))
    image = ax.imshow(grid, cmap="viridis")
    ax.set_xticks(range(N_COL_BINS), [str(j + 1) for j in range(N_COL_BINS)])
    ax.set_yticks(range(N_ROW_BINS), list(ROW_BIN_NAMES))
    ax.set_xlabel("column bin")
    ax.set_ylabel("row bin")
    ax.set_title(title)
    for b in range(N_ROW_BINS):
        for j in range(N_COL_BINS):
            value = grid[b, j]
            text = f"{value:.0f}" if float(value).is_integer() else f"{value:.3f}"
            ax.annotate(text, (j, b), ha="center", va="center", color="white", fontsize=8)
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def grid_text(grid: np.ndarray) -> str:
    """Plain-text rendering of a category grid for console summaries."""
    lines = ["     " + "".join(f"{j + 1:>9}" for j in range(N_COL_BINS))]
    for b in range(N_ROW_BINS):
        cells = "".join(f"{grid[b, j]:>9.3g}" for j in range(N_COL_BINS))
        lines.append(f"  {ROW_BIN_NAMES[b]}  {cells}")
    return "\n".join(lines)
