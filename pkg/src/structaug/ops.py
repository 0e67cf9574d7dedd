"""Structural augmentation operations on annotated table images.

Four atomic operations: deletion and replication of a column block or a row
block.  Each operation keeps the raster and the ground truth mutually
consistent, and either succeeds with a fully valid document or aborts and
leaves the table unaltered.

Column operations are implemented natively; row operations are the exact
transpose (swap x with y and column indices with row indices).  Index 0 on
either axis is never selected or relocated, so header rows and columns stay
put.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StructureError
from .model import Cell, TableDocument, transpose
from .rng import Rng


class Axis(enum.Enum):
    COLUMN = "column"
    ROW = "row"


class OpKind(enum.Enum):
    ROW_DELETE = "row-delete"
    COLUMN_DELETE = "column-delete"
    ROW_REPLICATE = "row-replicate"
    COLUMN_REPLICATE = "column-replicate"

    @property
    def axis(self) -> Axis:
        if self in (OpKind.ROW_DELETE, OpKind.ROW_REPLICATE):
            return Axis.ROW
        return Axis.COLUMN

    @property
    def is_deletion(self) -> bool:
        return self in (OpKind.ROW_DELETE, OpKind.COLUMN_DELETE)


# Fixed order for the uniform draw in apply_random_op.
OP_KINDS = (OpKind.ROW_DELETE, OpKind.COLUMN_DELETE, OpKind.ROW_REPLICATE, OpKind.COLUMN_REPLICATE)


class AbortReason(enum.Enum):
    NON_CONVEX_SOURCE = "non-convex-source"
    NON_CONVEX_TARGET = "non-convex-target"
    TOO_FEW_SEGMENTS = "too-few-segments"


@dataclass(frozen=True)
class BlockSelection:
    """A convex, self-contained block of segments on one axis.

    ``c_min``/``c_max`` are inclusive segment indices (1-based at minimum:
    index 0 is protected); ``x_min``/``x_max`` the pixel interval and ``w``
    its width.  For ``axis == ROW`` the pixel fields hold y-coordinates.
    """

    axis: Axis
    c_min: int
    c_max: int
    x_min: int
    x_max: int

    @property
    def w(self) -> int:
        return self.x_max - self.x_min

    @property
    def size(self) -> int:
        return self.c_max - self.c_min + 1


@dataclass(frozen=True)
class TargetSelection:
    """Insertion point for replication: the new block lands at the start of
    segment ``d`` (or after the last segment when ``d`` equals the segment
    count)."""

    axis: Axis
    d: int
    x_dst: int


@dataclass(frozen=True)
class OpRecord:
    kind: OpKind
    c_min: int
    c_max: int
    d: int | None = None

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind.value, "cMin": self.c_min, "cMax": self.c_max}
        if self.d is not None:
            obj["d"] = self.d
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "OpRecord":
        return cls(
            kind=OpKind(obj["kind"]),
            c_min=int(obj["cMin"]),
            c_max=int(obj["cMax"]),
            d=int(obj["d"]) if "d" in obj and obj["d"] is not None else None,
        )


@dataclass(frozen=True)
class OpOutcome:
    """Result of one operation attempt: a new document with its record, or
    the unaltered input document with an abort reason."""

    doc: TableDocument
    record: OpRecord | None = None
    aborted: AbortReason | None = None

    @property
    def ok(self) -> bool:
        return self.aborted is None


def _owner_table(doc: TableDocument) -> np.ndarray:
    """Grid position -> cell list index, without revalidating the document."""
    owner = np.full((doc.n_rows, doc.n_cols), -1, dtype=np.int64)
    for k, cell in enumerate(doc.cells):
        owner[cell.start_row : cell.end_row + 1, cell.start_col : cell.end_col + 1] = k
    return owner


def _column_spans(doc: TableDocument, owner: np.ndarray, c: int) -> tuple[int, int]:
    """Smallest and largest column index touched by any cell occupying grid
    column ``c`` (the span_min / span_max pair of the selection rules)."""
    span_min = doc.n_cols
    span_max = -1
    for r in range(doc.n_rows):
        cell = doc.cells[int(owner[r, c])]
        if cell.start_col < span_min:
            span_min = cell.start_col
        if cell.end_col > span_max:
            span_max = cell.end_col
    return span_min, span_max


def _is_convex(doc: TableDocument, owner: np.ndarray, c_min: int, c_max: int) -> bool:
    for r in range(doc.n_rows):
        for c in range(c_min, c_max + 1):
            cell = doc.cells[int(owner[r, c])]
            if cell.start_col < c_min or cell.end_col > c_max:
                return False
    return True


def expand_source_block(doc: TableDocument, axis: Axis, c: int) -> BlockSelection | AbortReason:
    """Expand the single segment ``c`` to a self-contained convex block.

    The block is the span-hull of every cell occupying segment ``c``; if the
    hull reaches the protected segment 0 or still cuts through a spanning
    cell, the operation is not possible and NON_CONVEX_SOURCE is returned.
    """
    work = transpose(doc) if axis is Axis.ROW else doc
    if not (1 <= c < work.n_cols):
        raise StructureError(f"source segment index {c} out of range (1..{work.n_cols - 1})")
    owner = _owner_table(work)
    span_min, span_max = _column_spans(work, owner, c)
    if span_min == 0:
        return AbortReason.NON_CONVEX_SOURCE
    if not _is_convex(work, owner, span_min, span_max):
        return AbortReason.NON_CONVEX_SOURCE
    return BlockSelection(
        axis=axis,
        c_min=span_min,
        c_max=span_max,
        x_min=work.columns[span_min].x1,
        x_max=work.columns[span_max].x2,
    )


def select_source_block(doc: TableDocument, axis: Axis, rng: Rng) -> BlockSelection | AbortReason:
    """Uniformly pick a source segment (index 0 excluded) and expand it."""
    work = transpose(doc) if axis is Axis.ROW else doc
    if work.n_cols < 2:
        return AbortReason.TOO_FEW_SEGMENTS
    c = 1 + rng.below(work.n_cols - 1)
    return expand_source_block(doc, axis, c)


def _splits_spanning_cell(doc: TableDocument, owner: np.ndarray, d: int) -> bool:
    """True when inserting at boundary ``d`` would cut a cell that spans
    across it (some cell occupying segment d starts before d)."""
    if d >= doc.n_cols:
        return False
    span_min, _ = _column_spans(doc, owner, d)
    return span_min < d


def correct_target_index(doc: TableDocument, axis: Axis, d: int) -> int | None:
    """Move an insertion index off any spanning cell it would split.

    Returns the (possibly unchanged) index, or None when even the corrected
    index cuts a spanning cell and the operation must abort.  The correction
    snaps to the nearer block edge, preferring the start on ties, but never
    onto the protected segment 0.
    """
    work = transpose(doc) if axis is Axis.ROW else doc
    if not (1 <= d <= work.n_cols):
        raise StructureError(f"target index {d} out of range (1..{work.n_cols})")
    owner = _owner_table(work)
    if not _splits_spanning_cell(work, owner, d):
        return d
    span_min, span_max = _column_spans(work, owner, d)
    if abs(d - span_min) <= abs(d - span_max) and span_min != 0:
        corrected = span_min
    else:
        corrected = span_max + 1
    if _splits_spanning_cell(work, owner, corrected):
        return None
    return corrected


def select_target_index(doc: TableDocument, axis: Axis, rng: Rng) -> TargetSelection | AbortReason:
    """Uniformly pick an insertion index in {1..C} and correct it."""
    work = transpose(doc) if axis is Axis.ROW else doc
    d = 1 + rng.below(work.n_cols)
    corrected = correct_target_index(doc, axis, d)
    if corrected is None:
        return AbortReason.NON_CONVEX_TARGET
    x_dst = work.columns[corrected].x1 if corrected < work.n_cols else work.columns[-1].x2
    return TargetSelection(axis=axis, d=corrected, x_dst=x_dst)


def block_selection_from_indices(doc: TableDocument, axis: Axis, c_min: int, c_max: int) -> BlockSelection:
    """Rebuild a BlockSelection from recorded indices, re-checking validity."""
    work = transpose(doc) if axis is Axis.ROW else doc
    if not (1 <= c_min <= c_max <= work.n_cols - 1):
        raise StructureError(f"block [{c_min}, {c_max}] out of range for {work.n_cols} segments")
    if not _is_convex(work, _owner_table(work), c_min, c_max):
        raise StructureError(f"block [{c_min}, {c_max}] is not convex")
    return BlockSelection(
        axis=axis,
        c_min=c_min,
        c_max=c_max,
        x_min=work.columns[c_min].x1,
        x_max=work.columns[c_max].x2,
    )


def target_selection_from_index(doc: TableDocument, axis: Axis, d: int) -> TargetSelection:
    work = transpose(doc) if axis is Axis.ROW else doc
    if not (1 <= d <= work.n_cols):
        raise StructureError(f"target index {d} out of range (1..{work.n_cols})")
    if _splits_spanning_cell(work, _owner_table(work), d):
        raise StructureError(f"target index {d} splits a spanning cell")
    x_dst = work.columns[d].x1 if d < work.n_cols else work.columns[-1].x2
    return TargetSelection(axis=axis, d=d, x_dst=x_dst)


def _delete_columns(doc: TableDocument, sel: BlockSelection) -> TableDocument:
    k = sel.size
    w = sel.w
    cells: list[Cell] = []
    for cell in doc.cells:
        if cell.end_col < sel.c_min:
            cells.append(cell)
        elif cell.start_col > sel.c_max:
            cells.append(cell.shifted(dcol=-k, dx=-w))
        elif not (cell.start_col >= sel.c_min and cell.end_col <= sel.c_max):
            raise StructureError("deletion block is not convex against this document")
    img = doc.image
    new_img = np.concatenate([img[:, : sel.x_min], img[:, sel.x_max :]], axis=1)
    return TableDocument(
        id=doc.id,
        image=new_img,
        columns=doc.columns[: sel.c_min] + tuple(c.shifted(-w) for c in doc.columns[sel.c_max + 1 :]),
        rows=doc.rows,
        cells=tuple(cells),
    )


def _replicate_columns(doc: TableDocument, sel: BlockSelection, tgt: TargetSelection) -> TableDocument:
    k = sel.size
    w = sel.w
    d = tgt.d
    copy_dx = tgt.x_dst - sel.x_min
    copy_dcol = d - sel.c_min

    columns = (
        doc.columns[:d]
        + tuple(c.shifted(copy_dx) for c in doc.columns[sel.c_min : sel.c_max + 1])
        + tuple(c.shifted(w) for c in doc.columns[d:])
    )

    # Existing cells keep their list order; copies of the block cells are
    # appended, so deleting the inserted block restores the original list.
    cells: list[Cell] = []
    for cell in doc.cells:
        if cell.end_col < d:
            cells.append(cell)
        elif cell.start_col >= d:
            cells.append(cell.shifted(dcol=k, dx=w))
        else:
            raise StructureError("target index splits a spanning cell in this document")
    for cell in doc.cells:
        if sel.c_min <= cell.start_col and cell.end_col <= sel.c_max:
            cells.append(cell.shifted(dcol=copy_dcol, dx=copy_dx))

    img = doc.image
    new_img = np.concatenate(
        [img[:, : tgt.x_dst], img[:, sel.x_min : sel.x_max], img[:, tgt.x_dst :]], axis=1
    )
    return TableDocument(id=doc.id, image=new_img, columns=columns, rows=doc.rows, cells=tuple(cells))


def _check_selection(doc: TableDocument, sel: BlockSelection) -> None:
    if not (1 <= sel.c_min <= sel.c_max < doc.n_cols):
        raise StructureError(f"selection [{sel.c_min}, {sel.c_max}] out of range")
    if doc.columns[sel.c_min].x1 != sel.x_min or doc.columns[sel.c_max].x2 != sel.x_max:
        raise StructureError("selection pixel interval does not match this document")


def delete_block(doc: TableDocument, sel: BlockSelection) -> TableDocument:
    """Remove the selected block from ground truth and raster."""
    if sel.axis is Axis.ROW:
        return transpose(delete_block(transpose(doc), BlockSelection(
            Axis.COLUMN, sel.c_min, sel.c_max, sel.x_min, sel.x_max)))
    _check_selection(doc, sel)
    return _delete_columns(doc, sel)


def replicate_block(doc: TableDocument, sel: BlockSelection, tgt: TargetSelection) -> TableDocument:
    """Insert a copy of the selected block at the target location.

    Pixels of the copy are taken from the pre-shift original image, so a
    block may be replicated onto its own position.
    """
    if sel.axis is not tgt.axis:
        raise StructureError("selection and target refer to different axes")
    if sel.axis is Axis.ROW:
        return transpose(
            _replicate_columns(
                transpose(doc),
                BlockSelection(Axis.COLUMN, sel.c_min, sel.c_max, sel.x_min, sel.x_max),
                TargetSelection(Axis.COLUMN, tgt.d, tgt.x_dst),
            )
        )
    _check_selection(doc, sel)
    return _replicate_columns(doc, sel, tgt)


def apply_random_op(doc: TableDocument, rng: Rng, op_kind: OpKind | None = None) -> OpOutcome:
    """Apply one randomly parameterized operation.

    Draw order is fixed: kind (when not given), source segment, then target
    index for replications.  An aborted attempt returns the input document
    unaltered together with the reason.
    """
    kind = OP_KINDS[rng.below(len(OP_KINDS))] if op_kind is None else op_kind
    axis = kind.axis
    work = transpose(doc) if axis is Axis.ROW else doc

    if work.n_cols < 2:
        return OpOutcome(doc, aborted=AbortReason.TOO_FEW_SEGMENTS)
    c = 1 + rng.below(work.n_cols - 1)
    sel = expand_source_block(work, Axis.COLUMN, c)
    if isinstance(sel, AbortReason):
        return OpOutcome(doc, aborted=sel)

    if kind.is_deletion:
        new_work = _delete_columns(work, sel)
        record = OpRecord(kind=kind, c_min=sel.c_min, c_max=sel.c_max)
    else:
        drawn = 1 + rng.below(work.n_cols)
        d = correct_target_index(work, Axis.COLUMN, drawn)
        if d is None:
            return OpOutcome(doc, aborted=AbortReason.NON_CONVEX_TARGET)
        x_dst = work.columns[d].x1 if d < work.n_cols else work.columns[-1].x2
        tgt = TargetSelection(axis=Axis.COLUMN, d=d, x_dst=x_dst)
        new_work = _replicate_columns(work, sel, tgt)
        record = OpRecord(kind=kind, c_min=sel.c_min, c_max=sel.c_max, d=d)

    new_doc = transpose(new_work) if axis is Axis.ROW else new_work
    return OpOutcome(new_doc, record=record)


def replay_record(doc: TableDocument, record: OpRecord) -> TableDocument:
    """Re-apply a recorded operation; selections are rebuilt and re-checked
    against the current document."""
    axis = record.kind.axis
    sel = block_selection_from_indices(doc, axis, record.c_min, record.c_max)
    if record.kind.is_deletion:
        return delete_block(doc, sel)
    if record.d is None:
        raise StructureError("replication record is missing its target index")
    tgt = target_selection_from_index(doc, axis, record.d)
    return replicate_block(doc, sel, tgt)


@dataclass(frozen=True)
class StandardAugmentParams:
    """Image-transform baseline: random crop plus hue / saturation /
    brightness jitter.  Annotations are left untouched."""

    crop_fraction: float = 1.0
    brightness_jitter: float = 0.0
    hue_jitter: float = 0.0
    saturation_jitter: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.crop_fraction <= 1.0):
            raise ConfigError("crop_fraction must be in (0, 1]")


def standard_augment(image: np.ndarray, params: StandardAugmentParams, rng: Rng) -> np.ndarray:
    """Crop then jitter.  Factors are drawn uniformly from [1-j, 1+j); the
    hue and saturation draws happen for grayscale input too (and are ignored)
    so the stream consumption does not depend on image mode."""
    if image.size == 0:
        raise ValueError("empty image")
    h, w = image.shape[:2]
    cw = max(1, int(round(params.crop_fraction * w)))
    ch = max(1, int(round(params.crop_fraction * h)))
    ox = rng.below(w - cw + 1)
    oy = rng.below(h - ch + 1)
    out = image[oy : oy + ch, ox : ox + cw]

    f_hue = 1.0 - params.hue_jitter + 2.0 * params.hue_jitter * rng.random()
    f_sat = 1.0 - params.saturation_jitter + 2.0 * params.saturation_jitter * rng.random()
    f_bri = 1.0 - params.brightness_jitter + 2.0 * params.brightness_jitter * rng.random()

    values = out.astype(np.float64)
    if out.ndim == 3 and (params.hue_jitter != 0.0 or params.saturation_jitter != 0.0):
        from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

        hsv = rgb_to_hsv(values / 255.0)
        hsv[..., 0] = (hsv[..., 0] * f_hue) % 1.0
        hsv[..., 1] = np.clip(hsv[..., 1] * f_sat, 0.0, 1.0)
        values = hsv_to_rgb(hsv) * 255.0
    values = values * f_bri
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)
