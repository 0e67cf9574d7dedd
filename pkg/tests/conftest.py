from __future__ import annotations

import numpy as np
import pytest

from structaug.model import Cell, ColumnBox, RowBox, TableDocument


def build_table(
    col_edges: list[int],
    row_edges: list[int],
    spans: list[tuple[int, int, int, int]] | None = None,
    table_id: str = "t0",
    pattern: bool = True,
    rgb: bool = False,
) -> TableDocument:
    """Hand-fixture builder: explicit pixel edges plus optional merged
    rectangles (r1, r2, c1, c2).  Cells are emitted row-major by their
    top-left position; bboxes cover the full spanned region.

    With ``pattern`` the raster holds a position-dependent value so any
    misplaced pixel copy is detectable.
    """
    spans = spans or []
    n_cols = len(col_edges) - 1
    n_rows = len(row_edges) - 1
    owner = -np.ones((n_rows, n_cols), dtype=int)
    for k, (r1, r2, c1, c2) in enumerate(spans):
        assert (owner[r1 : r2 + 1, c1 : c2 + 1] == -1).all(), "overlapping spans in fixture"
        owner[r1 : r2 + 1, c1 : c2 + 1] = k

    cells = []
    emitted = set()
    for r in range(n_rows):
        for c in range(n_cols):
            k = owner[r, c]
            if k >= 0:
                if k in emitted:
                    continue
                emitted.add(k)
                r1, r2, c1, c2 = spans[k]
            else:
                r1 = r2 = r
                c1 = c2 = c
            cells.append(
                Cell(
                    start_row=r1,
                    end_row=r2,
                    start_col=c1,
                    end_col=c2,
                    bbox=(col_edges[c1], row_edges[r1], col_edges[c2 + 1], row_edges[r2 + 1]),
                )
            )

    width, height = col_edges[-1], row_edges[-1]
    if pattern:
        xs = np.arange(width, dtype=np.uint32)
        ys = np.arange(height, dtype=np.uint32)
        image = ((xs[None, :] * 31 + ys[:, None] * 17) % 251).astype(np.uint8)
    else:
        image = np.full((height, width), 255, dtype=np.uint8)
    if rgb:
        image = np.stack([image, np.roll(image, 1, axis=1), np.roll(image, 1, axis=0)], axis=-1)

    return TableDocument(
        id=table_id,
        image=image,
        columns=tuple(ColumnBox(col_edges[i], col_edges[i + 1]) for i in range(n_cols)),
        rows=tuple(RowBox(row_edges[i], row_edges[i + 1]) for i in range(n_rows)),
        cells=tuple(cells),
    )


@pytest.fixture
def minimal_table() -> TableDocument:
    return build_table([0, 40], [0, 20])


@pytest.fixture
def plain_3x3() -> TableDocument:
    return build_table([0, 30, 60, 90], [0, 20, 40, 60])
