"""Brute-force per-pixel reference implementation of the segmentation
metrics, kept deliberately independent of the rectangle-arithmetic code
under test: segments are rendered into boolean pixel masks and every rule is
re-derived from mask intersections with plain loops."""

from __future__ import annotations

import numpy as np

from structaug.metrics import SegmentSet


def render_masks(segments: SegmentSet) -> list[np.ndarray]:
    w, h = segments.canvas
    masks = []
    for x1, y1, x2, y2 in segments.rects:
        mask = np.zeros((h, w), dtype=bool)
        mask[y1:y2, x1:x2] = True
        masks.append(mask)
    return masks


def oracle_matrix(gt: SegmentSet, pred: SegmentSet) -> np.ndarray:
    gt_masks = render_masks(gt)
    pred_masks = render_masks(pred)
    matrix = np.zeros((len(gt_masks), len(pred_masks)), dtype=np.int64)
    for i, gm in enumerate(gt_masks):
        for j, pm in enumerate(pred_masks):
            matrix[i, j] = np.count_nonzero(gm & pm)
    return matrix


def oracle_counts(gt: SegmentSet, pred: SegmentSet, threshold: float) -> tuple[int, int, int]:
    """(correct, over-segmented, under-segmented) from pixel masks."""
    gt_masks = render_masks(gt)
    pred_masks = render_masks(pred)
    areas = [int(m.sum()) for m in gt_masks]
    n, m = len(gt_masks), len(pred_masks)
    inter = np.zeros((n, m), dtype=np.int64)
    for i, gm in enumerate(gt_masks):
        for j, pm in enumerate(pred_masks):
            inter[i, j] = np.count_nonzero(gm & pm)

    correct = 0
    for i in range(n):
        for j in range(m):
            if inter[i, j] / areas[i] <= 1.0 - threshold:
                continue
            one_to_one = True
            for k in range(n):
                if k != i and not (inter[k, j] / areas[k] < threshold):
                    one_to_one = False
                    break
            if one_to_one:
                correct += 1
                break

    over = 0
    for i in range(n):
        partials = 0
        for j in range(m):
            ratio = inter[i, j] / areas[i]
            if threshold < ratio < 1.0 - threshold:
                partials += 1
        if partials >= 2:
            over += 1

    under = 0
    for j in range(m):
        partials = 0
        for i in range(n):
            ratio = inter[i, j] / areas[i]
            if threshold < ratio < 1.0 - threshold:
                partials += 1
        if partials >= 2:
            under += 1

    return correct, over, under
