"""Correspondence-matrix evaluation of predicted table structures.

Ground-truth and predicted segments (row bands, column bands, or cell
rectangles) are intersected pairwise into an n x m pixel-count matrix; three
counts are derived from it at a threshold T (default 0.1):

* correct detections - ground-truth segments with a one-to-one major-overlap
  partner (ratio > 1-T) whose partner has no significant overlap (ratio >= T)
  with any other ground-truth segment;
* over-segmentations - ground-truth segments significantly but partially
  overlapped (T < ratio < 1-T) by at least two predictions;
* under-segmentations - predictions significantly but partially overlapping
  at least two ground-truth segments.

All ratios are against ground-truth segment areas and all inequalities are
strict, so boundary ratios equal to T or 1-T never qualify.  Counts are
reported as percentages of the ground-truth segment total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CanvasMismatchError, ConfigError
from .model import TableDocument

DEFAULT_THRESHOLD = 0.1

Rect = tuple[int, int, int, int]  # (x1, y1, x2, y2), half-open

KINDS = ("row", "column", "cell")


@dataclass(frozen=True)
class SegmentSet:
    """Pixel regions of one kind over a common canvas."""

    kind: str
    canvas: tuple[int, int]  # (W, H)
    rects: tuple[Rect, ...]

    def __post_init__(self) -> None:
        w, h = self.canvas
        for r in self.rects:
            x1, y1, x2, y2 = r
            if not (0 <= x1 < x2 <= w and 0 <= y1 < y2 <= h):
                raise ValueError(f"segment {r} is empty or outside the {w}x{h} canvas")

    def areas(self) -> np.ndarray:
        return np.asarray([(x2 - x1) * (y2 - y1) for x1, y1, x2, y2 in self.rects], dtype=np.int64)


def row_segments(doc: TableDocument) -> SegmentSet:
    w = doc.width
    return SegmentSet("row", (w, doc.height), tuple((0, r.y1, w, r.y2) for r in doc.rows))


def column_segments(doc: TableDocument) -> SegmentSet:
    h = doc.height
    return SegmentSet("column", (doc.width, h), tuple((c.x1, 0, c.x2, h) for c in doc.columns))


def cell_segments(doc: TableDocument) -> SegmentSet:
    """Cell regions are the spanned column x row pixel rectangles, not the
    annotated content boxes, so the metric is a pure function of structure."""
    rects = tuple(
        (
            doc.columns[c.start_col].x1,
            doc.rows[c.start_row].y1,
            doc.columns[c.end_col].x2,
            doc.rows[c.end_row].y2,
        )
        for c in doc.cells
    )
    return SegmentSet("cell", (doc.width, doc.height), rects)


def correspondence(gt: SegmentSet, pred: SegmentSet) -> np.ndarray:
    """n x m matrix of exact pixel intersection counts."""
    if gt.canvas != pred.canvas:
        raise CanvasMismatchError(f"canvas mismatch: {gt.canvas} vs {pred.canvas}")
    g = np.asarray(gt.rects, dtype=np.int64).reshape(-1, 4)
    p = np.asarray(pred.rects, dtype=np.int64).reshape(-1, 4)
    ix = np.minimum(g[:, None, 2], p[None, :, 2]) - np.maximum(g[:, None, 0], p[None, :, 0])
    iy = np.minimum(g[:, None, 3], p[None, :, 3]) - np.maximum(g[:, None, 1], p[None, :, 1])
    return np.clip(ix, 0, None) * np.clip(iy, 0, None)


def _ratios(matrix: np.ndarray, gt_areas: np.ndarray) -> np.ndarray:
    return matrix / gt_areas[:, None].astype(np.float64)


def correct_detections(matrix: np.ndarray, gt_areas: Sequence[int], threshold: float) -> int:
    if matrix.size == 0:
        return 0
    ratios = _ratios(matrix, np.asarray(gt_areas, dtype=np.int64))
    significant_per_pred = (ratios >= threshold).sum(axis=0)
    count = 0
    for i in range(ratios.shape[0]):
        for j in range(ratios.shape[1]):
            if ratios[i, j] > 1.0 - threshold and significant_per_pred[j] == 1:
                count += 1
                break
    return count


def over_segmentations(matrix: np.ndarray, gt_areas: Sequence[int], threshold: float) -> int:
    if matrix.size == 0:
        return 0
    ratios = _ratios(matrix, np.asarray(gt_areas, dtype=np.int64))
    partial = (ratios > threshold) & (ratios < 1.0 - threshold)
    return int((partial.sum(axis=1) >= 2).sum())


def under_segmentations(matrix: np.ndarray, gt_areas: Sequence[int], threshold: float) -> int:
    if matrix.size == 0:
        return 0
    ratios = _ratios(matrix, np.asarray(gt_areas, dtype=np.int64))
    partial = (ratios > threshold) & (ratios < 1.0 - threshold)
    return int((partial.sum(axis=0) >= 2).sum())


@dataclass(frozen=True)
class KindReport:
    gt_count: int
    correct: int
    over_seg: int
    under_seg: int

    def _pct(self, count: int) -> float:
        return 100.0 * count / self.gt_count if self.gt_count else 0.0

    @property
    def correct_pct(self) -> float:
        return self._pct(self.correct)

    @property
    def over_pct(self) -> float:
        return self._pct(self.over_seg)

    @property
    def under_pct(self) -> float:
        return self._pct(self.under_seg)

    def to_json(self) -> dict:
        return {
            "gtCount": self.gt_count,
            "correct": self.correct,
            "overSeg": self.over_seg,
            "underSeg": self.under_seg,
            "correctPct": round(self.correct_pct, 2),
            "overPct": round(self.over_pct, 2),
            "underPct": round(self.under_pct, 2),
        }

    @staticmethod
    def merged(reports: Sequence["KindReport"]) -> "KindReport":
        """Pool segment counts across tables (dataset-wide normalization)."""
        return KindReport(
            gt_count=sum(r.gt_count for r in reports),
            correct=sum(r.correct for r in reports),
            over_seg=sum(r.over_seg for r in reports),
            under_seg=sum(r.under_seg for r in reports),
        )


@dataclass(frozen=True)
class SegmentationReport:
    row: KindReport
    column: KindReport
    cell: KindReport

    def kind(self, name: str) -> KindReport:
        return {"row": self.row, "column": self.column, "cell": self.cell}[name]

    def to_json(self) -> dict:
        return {name: self.kind(name).to_json() for name in KINDS}

    def to_bytes(self) -> bytes:
        return (json.dumps(self.to_json(), indent=2) + "\n").encode("utf-8")

    @staticmethod
    def merged(reports: Sequence["SegmentationReport"]) -> "SegmentationReport":
        return SegmentationReport(
            row=KindReport.merged([r.row for r in reports]),
            column=KindReport.merged([r.column for r in reports]),
            cell=KindReport.merged([r.cell for r in reports]),
        )


def evaluate_segments(gt: SegmentSet, pred: SegmentSet, threshold: float) -> KindReport:
    matrix = correspondence(gt, pred)
    areas = gt.areas()
    return KindReport(
        gt_count=len(gt.rects),
        correct=correct_detections(matrix, areas, threshold),
        over_seg=over_segmentations(matrix, areas, threshold),
        under_seg=under_segmentations(matrix, areas, threshold),
    )


def evaluate(
    gt_doc: TableDocument, pred_doc: TableDocument, threshold: float = DEFAULT_THRESHOLD
) -> SegmentationReport:
    """Evaluate a predicted structure against ground truth on one canvas."""
    if not (0.0 < threshold < 0.5):
        raise ConfigError(f"threshold must be in (0, 0.5), got {threshold}")
    if (gt_doc.width, gt_doc.height) != (pred_doc.width, pred_doc.height):
        raise CanvasMismatchError(
            f"prediction canvas {pred_doc.width}x{pred_doc.height} does not match "
            f"ground truth {gt_doc.width}x{gt_doc.height}"
        )
    return SegmentationReport(
        row=evaluate_segments(row_segments(gt_doc), row_segments(pred_doc), threshold),
        column=evaluate_segments(column_segments(gt_doc), column_segments(pred_doc), threshold),
        cell=evaluate_segments(cell_segments(gt_doc), cell_segments(pred_doc), threshold),
    )
