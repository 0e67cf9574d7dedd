"""Canonical in-memory representation of an annotated table image.

A table is a raster plus an ordered list of column boxes, an ordered list of
row boxes and a list of cells addressed by inclusive grid-index spans.  Pixel
intervals are half-open ``[lo, hi)`` with integer coordinates, origin at the
table's top-left corner (x rightward, y downward).  Documents are stored
already cropped to the table region, so the first column starts at x=0, the
first row at y=0, and annotation coordinates equal pixel coordinates.

All types are immutable after construction and every operation in this
package is a pure function over them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import StructureError


@dataclass(frozen=True, order=True)
class ColumnBox:
    x1: int
    x2: int

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    def shifted(self, dx: int) -> "ColumnBox":
        return ColumnBox(self.x1 + dx, self.x2 + dx)


@dataclass(frozen=True, order=True)
class RowBox:
    y1: int
    y2: int

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    def shifted(self, dy: int) -> "RowBox":
        return RowBox(self.y1 + dy, self.y2 + dy)


@dataclass(frozen=True)
class Cell:
    """One logical cell covering the inclusive grid rectangle
    (start_row..end_row) x (start_col..end_col).

    Span indices are authoritative for structure; ``bbox`` (x1, y1, x2, y2,
    half-open) locates the rendered content and must stay inside the pixel
    rectangle spanned by the referenced columns and rows.
    """

    start_row: int
    end_row: int
    start_col: int
    end_col: int
    bbox: tuple[int, int, int, int]
    empty: bool = False

    def positions(self) -> Iterator[tuple[int, int]]:
        for r in range(self.start_row, self.end_row + 1):
            for c in range(self.start_col, self.end_col + 1):
                yield (r, c)

    def shifted(self, *, dcol: int = 0, drow: int = 0, dx: int = 0, dy: int = 0) -> "Cell":
        x1, y1, x2, y2 = self.bbox
        return Cell(
            start_row=self.start_row + drow,
            end_row=self.end_row + drow,
            start_col=self.start_col + dcol,
            end_col=self.end_col + dcol,
            bbox=(x1 + dx, y1 + dy, x2 + dx, y2 + dy),
            empty=self.empty,
        )

    def transposed(self) -> "Cell":
        x1, y1, x2, y2 = self.bbox
        return Cell(
            start_row=self.start_col,
            end_row=self.end_col,
            start_col=self.start_row,
            end_col=self.end_row,
            bbox=(y1, x1, y2, x2),
            empty=self.empty,
        )


@dataclass(frozen=True, eq=False)
class TableDocument:
    """One annotated table: pixels plus structure.

    ``image`` is an 8-bit grayscale ``(H, W)`` or RGB ``(H, W, 3)`` array; it
    is copied and frozen on construction so documents can be shared freely
    across threads.
    """

    id: str
    image: np.ndarray
    columns: tuple[ColumnBox, ...]
    rows: tuple[RowBox, ...]
    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        img = np.ascontiguousarray(self.image)
        img.flags.writeable = False
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    @property
    def height(self) -> int:
        return int(self.image.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TableDocument):
            return NotImplemented
        return (
            self.id == other.id
            and self.columns == other.columns
            and self.rows == other.rows
            and self.cells == other.cells
            and self.image.shape == other.image.shape
            and self.image.dtype == other.image.dtype
            and bool(np.array_equal(self.image, other.image))
        )

    def structure_equal(self, other: "TableDocument") -> bool:
        """Equality of everything the annotation serialization captures."""
        return (
            self.id == other.id
            and self.columns == other.columns
            and self.rows == other.rows
            and self.cells == other.cells
        )


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return "valid" if self.ok else "; ".join(str(v) for v in self.violations)


def _check_boxes(kind: str, lows_highs: list[tuple[int, int]], out: list[Violation]) -> None:
    """Shared sortedness / extent / tiling checks for one axis."""
    lo_name = "x1" if kind == "column" else "y1"
    for i, (lo, hi) in enumerate(lows_highs):
        if not (isinstance(lo, int) and isinstance(hi, int)):
            out.append(Violation(f"{kind}-extent", f"{kind} {i} has non-integer coordinates"))
            return
        if lo < 0:
            out.append(Violation(f"{kind}-extent", f"{kind} {i} has negative {lo_name}={lo}"))
        if lo >= hi:
            out.append(Violation(f"{kind}-extent", f"{kind} {i} is empty or inverted ([{lo}, {hi}))"))
    if lows_highs and lows_highs[0][0] != 0:
        out.append(Violation(f"{kind}-origin", f"first {kind} starts at {lows_highs[0][0]}, expected 0"))
    for i in range(len(lows_highs) - 1):
        hi = lows_highs[i][1]
        nxt = lows_highs[i + 1][0]
        if hi > nxt:
            out.append(
                Violation(f"{kind}-overlap", f"{kind}s {i} and {i + 1} overlap by {hi - nxt}px")
            )
        elif hi < nxt:
            out.append(Violation(f"{kind}-gap", f"{kind}s {i} and {i + 1} leave a {nxt - hi}px gap"))


def validate(doc: TableDocument) -> ValidationReport:
    """Check every structural invariant; violations are data, not errors.

    Returns an empty report when the document is valid.  Never mutates and
    never raises on bad structure.
    """
    out: list[Violation] = []

    if doc.image.dtype != np.uint8 or doc.image.ndim not in (2, 3) or (
        doc.image.ndim == 3 and doc.image.shape[2] != 3
    ):
        out.append(
            Violation(
                "image-format",
                f"image must be uint8 (H, W) or (H, W, 3), got {doc.image.dtype} {doc.image.shape}",
            )
        )

    if not doc.columns:
        out.append(Violation("column-missing", "table has no columns"))
    if not doc.rows:
        out.append(Violation("row-missing", "table has no rows"))
    if not doc.cells:
        out.append(Violation("cell-missing", "table has no cells"))

    _check_boxes("column", [(c.x1, c.x2) for c in doc.columns], out)
    _check_boxes("row", [(r.y1, r.y2) for r in doc.rows], out)

    if doc.columns:
        span_w = doc.columns[-1].x2 - doc.columns[0].x1
        if doc.width != span_w:
            out.append(
                Violation("image-size", f"image width {doc.width} != column span {span_w}")
            )
    if doc.rows:
        span_h = doc.rows[-1].y2 - doc.rows[0].y1
        if doc.height != span_h:
            out.append(Violation("image-size", f"image height {doc.height} != row span {span_h}"))

    n_rows, n_cols = doc.n_rows, doc.n_cols
    coverage = np.zeros((n_rows, n_cols), dtype=np.int32)
    for k, cell in enumerate(doc.cells):
        if not (
            0 <= cell.start_row <= cell.end_row < n_rows
            and 0 <= cell.start_col <= cell.end_col < n_cols
        ):
            out.append(
                Violation(
                    "cell-span",
                    f"cell {k} spans rows {cell.start_row}..{cell.end_row}, "
                    f"cols {cell.start_col}..{cell.end_col}, outside the {n_rows}x{n_cols} grid",
                )
            )
            continue
        coverage[cell.start_row : cell.end_row + 1, cell.start_col : cell.end_col + 1] += 1

        x_lo = doc.columns[cell.start_col].x1
        x_hi = doc.columns[cell.end_col].x2
        y_lo = doc.rows[cell.start_row].y1
        y_hi = doc.rows[cell.end_row].y2
        bx1, by1, bx2, by2 = cell.bbox
        if not (x_lo <= bx1 <= bx2 <= x_hi and y_lo <= by1 <= by2 <= y_hi):
            out.append(
                Violation(
                    "cell-bbox",
                    f"cell {k} bbox {cell.bbox} is outside its spanned region "
                    f"[{x_lo}, {x_hi}) x [{y_lo}, {y_hi})",
                )
            )

    if not any(v.code == "cell-span" for v in out):
        for r, c in zip(*np.nonzero(coverage == 0)):
            out.append(Violation("coverage-gap", f"grid position ({r}, {c}) is covered by no cell"))
        for r, c in zip(*np.nonzero(coverage > 1)):
            out.append(
                Violation(
                    "duplicate-coverage",
                    f"grid position ({r}, {c}) has duplicate coverage ({coverage[r, c]} cells)",
                )
            )

    return ValidationReport(tuple(out))


class CellGridIndex:
    """Total R x C lookup from grid position to the owning cell."""

    def __init__(self, doc: TableDocument, owner: np.ndarray) -> None:
        self._doc = doc
        self._owner = owner

    @property
    def shape(self) -> tuple[int, int]:
        return self._owner.shape  # type: ignore[return-value]

    def cell_at(self, row: int, col: int) -> Cell:
        return self._doc.cells[int(self._owner[row, col])]

    def owner_index(self, row: int, col: int) -> int:
        return int(self._owner[row, col])


def grid_index(doc: TableDocument) -> CellGridIndex:
    """Build the position -> cell lookup; requires a valid document."""
    report = validate(doc)
    if not report.ok:
        raise StructureError(f"invalid table document: {report.violations[0]}")
    owner = np.full((doc.n_rows, doc.n_cols), -1, dtype=np.int64)
    for k, cell in enumerate(doc.cells):
        owner[cell.start_row : cell.end_row + 1, cell.start_col : cell.end_col + 1] = k
    return CellGridIndex(doc, owner)


def transpose(doc: TableDocument) -> TableDocument:
    """Swap the x and y axes: columns become rows, rows become columns.

    Row operations are defined as the transpose of the corresponding column
    operations, so this is the single place where the axis symmetry lives.
    """
    return TableDocument(
        id=doc.id,
        image=np.ascontiguousarray(np.swapaxes(doc.image, 0, 1)),
        columns=tuple(ColumnBox(r.y1, r.y2) for r in doc.rows),
        rows=tuple(RowBox(c.x1, c.x2) for c in doc.columns),
        cells=tuple(c.transposed() for c in doc.cells),
    )
