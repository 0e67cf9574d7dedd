"""Deterministic synthetic tables for demos and pipeline exercising.

Generated documents are always valid: boxes tile exactly, spanning cells
cover rectangles, and rendered ink stays inside cell content boxes (never on
an annotated boundary), which also makes them usable as separator-band
fixtures.
"""

from __future__ import annotations

import numpy as np

from .model import Cell, ColumnBox, RowBox, TableDocument
from .rng import Rng

_CONTENT_MARGIN = 2


def _merge_labels(labels: np.ndarray, rng: Rng, attempts: int) -> None:
    n_rows, n_cols = labels.shape
    for _ in range(attempts):
        shape = rng.below(3)
        if shape == 0 and n_cols >= 2:  # horizontal strip
            r1 = r2 = rng.below(n_rows)
            c1 = rng.below(n_cols - 1)
            c2 = min(n_cols - 1, c1 + 1 + rng.below(2))
        elif shape == 1 and n_rows >= 2:  # vertical strip
            c1 = c2 = rng.below(n_cols)
            r1 = rng.below(n_rows - 1)
            r2 = min(n_rows - 1, r1 + 1 + rng.below(2))
        elif shape == 2 and n_rows >= 2 and n_cols >= 2:  # 2x2 block
            r1 = rng.below(n_rows - 1)
            r2 = r1 + 1
            c1 = rng.below(n_cols - 1)
            c2 = c1 + 1
        else:
            continue
        # Merge only when every cell touched by the rectangle lies fully
        # inside it, otherwise coverage would stop being rectangular.
        contained = True
        for label in np.unique(labels[r1 : r2 + 1, c1 : c2 + 1]):
            rs, cs = np.nonzero(labels == label)
            if rs.min() < r1 or rs.max() > r2 or cs.min() < c1 or cs.max() > c2:
                contained = False
                break
        if contained:
            labels[r1 : r2 + 1, c1 : c2 + 1] = labels[r1, c1]


def _render_words(image: np.ndarray, bbox: tuple[int, int, int, int], rng: Rng) -> None:
    x1, y1, x2, y2 = bbox
    width, height = x2 - x1, y2 - y1
    if width < 3 or height < 3:
        return
    for _ in range(1 + rng.below(3)):
        ww = min(width, 2 + rng.below(max(1, width - 2)))
        wh = min(height, 2 + rng.below(max(1, height - 2)))
        ox = x1 + rng.below(width - ww + 1)
        oy = y1 + rng.below(height - wh + 1)
        shade = rng.below(120)
        image[oy : oy + wh, ox : ox + ww, ...] = shade


def make_table(
    rng: Rng,
    *,
    n_rows: int | None = None,
    n_cols: int | None = None,
    max_rows: int = 10,
    max_cols: int = 10,
    span_attempts: int | None = None,
    rgb: bool | None = None,
    table_id: str | None = None,
) -> TableDocument:
    """Build one random valid table with rendered fake content."""
    if n_rows is None:
        n_rows = rng.randint(1, max_rows)
    if n_cols is None:
        n_cols = rng.randint(1, max_cols)
    if rgb is None:
        rgb = rng.below(4) == 0
    if span_attempts is None:
        span_attempts = rng.below(1 + n_rows * n_cols // 3)

    col_widths = [rng.randint(12, 30) for _ in range(n_cols)]
    row_heights = [rng.randint(9, 20) for _ in range(n_rows)]
    x_edges = np.concatenate([[0], np.cumsum(col_widths)])
    y_edges = np.concatenate([[0], np.cumsum(row_heights)])
    columns = tuple(ColumnBox(int(x_edges[i]), int(x_edges[i + 1])) for i in range(n_cols))
    rows = tuple(RowBox(int(y_edges[i]), int(y_edges[i + 1])) for i in range(n_rows))

    labels = np.arange(n_rows * n_cols, dtype=np.int64).reshape(n_rows, n_cols)
    if span_attempts and n_rows * n_cols > 1:
        _merge_labels(labels, rng, span_attempts)

    width, height = int(x_edges[-1]), int(y_edges[-1])
    image = np.full((height, width, 3) if rgb else (height, width), 255, dtype=np.uint8)

    cells = []
    for label in sorted(np.unique(labels)):
        positions = np.nonzero(labels == label)
        r1, r2 = int(positions[0].min()), int(positions[0].max())
        c1, c2 = int(positions[1].min()), int(positions[1].max())
        x_lo, x_hi = int(x_edges[c1]), int(x_edges[c2 + 1])
        y_lo, y_hi = int(y_edges[r1]), int(y_edges[r2 + 1])
        mx = min(_CONTENT_MARGIN, (x_hi - x_lo) // 2)
        my = min(_CONTENT_MARGIN, (y_hi - y_lo) // 2)
        bbox = (x_lo + mx, y_lo + my, x_hi - mx, y_hi - my)
        empty = rng.below(10) == 0
        if not empty:
            _render_words(image, bbox, rng)
        cells.append(
            Cell(start_row=r1, end_row=r2, start_col=c1, end_col=c2, bbox=bbox, empty=empty)
        )

    if table_id is None:
        table_id = f"synth-{rng.next_u64():016x}"
    return TableDocument(id=table_id, image=image, columns=columns, rows=rows, cells=tuple(cells))
