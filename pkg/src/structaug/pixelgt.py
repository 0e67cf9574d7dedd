"""Pixel-level separator ground truth for split-style segmentation models.

The annotated row/column boundaries are thin lines; segmentation training
wants thick separator regions instead, so each internal boundary is expanded
to the nearest ink on either side (horizontally for column separators,
vertically for row separators).  Ink is located through foreground
projection profiles, which makes the inter-word whitespace the separator
band without any word-box annotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CanvasMismatchError
from .model import TableDocument
from .ops import Axis

# Anti-aliased scans leave faint strokes; a high default keeps light-gray
# ruling lines and halftones as ink.
DEFAULT_BINARIZE_THRESHOLD = 192


def binarize(image: np.ndarray, threshold: int = DEFAULT_BINARIZE_THRESHOLD) -> np.ndarray:
    """Foreground (ink) mask: luminance below the threshold.

    RGB input is reduced with integer Rec.601 luma first.
    """
    if image.ndim == 3:
        r = image[..., 0].astype(np.uint32)
        g = image[..., 1].astype(np.uint32)
        b = image[..., 2].astype(np.uint32)
        gray = (299 * r + 587 * g + 114 * b + 500) // 1000
    else:
        gray = image
    return (gray < threshold).astype(np.uint8)


def foreground_profile(binary: np.ndarray, axis: Axis) -> np.ndarray:
    """Per-coordinate ink counts: length-W column profile or length-H row
    profile."""
    if axis is Axis.COLUMN:
        return binary.sum(axis=0, dtype=np.int64)
    return binary.sum(axis=1, dtype=np.int64)


@dataclass(frozen=True)
class SeparatorMask:
    """All separator bands of one axis: half-open [lo, hi) intervals, one per
    internal boundary, in boundary order, pairwise disjoint and never empty."""

    axis: Axis
    shape: tuple[int, int]  # (H, W)
    bands: tuple[tuple[int, int], ...]

    def to_raster(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=np.uint8)
        for lo, hi in self.bands:
            if self.axis is Axis.COLUMN:
                mask[:, lo:hi] = 1
            else:
                mask[lo:hi, :] = 1
        return mask


def _expand_axis(boundaries: list[int], profile: np.ndarray, extent: int) -> list[tuple[int, int]]:
    ink = np.nonzero(profile > 0)[0]
    bands: list[tuple[int, int]] = []
    for b in boundaries:
        left_ink = ink[ink < b]
        right_ink = ink[ink >= b]
        lo = int(left_ink[-1]) + 1 if left_ink.size else 0
        hi = int(right_ink[0]) if right_ink.size else extent
        if hi <= lo:
            # Ink crosses the annotated boundary; collapse to the 1px line.
            lo, hi = b, b + 1
        bands.append((lo, hi))

    # Adjacent bands may both claim the whitespace between their boundaries
    # (e.g. an entirely blank segment); split shared ground at the midpoint.
    fixed: list[tuple[int, int]] = []
    for i, (lo, hi) in enumerate(bands):
        if fixed and lo < fixed[-1][1]:
            lo = fixed[-1][1]
        if i + 1 < len(bands) and hi > bands[i + 1][0]:
            hi = min(hi, (boundaries[i] + boundaries[i + 1]) // 2)
        if hi <= lo:
            lo, hi = boundaries[i], boundaries[i] + 1
            if fixed and lo < fixed[-1][1]:
                lo, hi = fixed[-1][1], fixed[-1][1] + 1
        fixed.append((lo, hi))
    return fixed


def expand_separators(
    doc: TableDocument, binary: np.ndarray
) -> tuple[SeparatorMask, SeparatorMask]:
    """Expand every internal boundary into a whitespace band.

    Returns (row mask, column mask).  A side with no ink anywhere extends to
    the table edge; bands never cover ink except when ink crosses the
    annotated boundary itself, in which case the band collapses to the 1px
    boundary line.
    """
    if binary.shape[:2] != doc.image.shape[:2]:
        raise CanvasMismatchError(
            f"binary raster {binary.shape[:2]} does not match document "
            f"{doc.image.shape[:2]}"
        )
    height, width = binary.shape[:2]

    col_boundaries = [c.x2 for c in doc.columns[:-1]]
    row_boundaries = [r.y2 for r in doc.rows[:-1]]
    col_bands = _expand_axis(col_boundaries, foreground_profile(binary, Axis.COLUMN), width)
    row_bands = _expand_axis(row_boundaries, foreground_profile(binary, Axis.ROW), height)

    return (
        SeparatorMask(axis=Axis.ROW, shape=(height, width), bands=tuple(row_bands)),
        SeparatorMask(axis=Axis.COLUMN, shape=(height, width), bands=tuple(col_bands)),
    )


def write_mask_png(mask: SeparatorMask, path: Path | str) -> None:
    """8-bit PNG, 0 = background, 255 = separator."""
    Image.fromarray(mask.to_raster() * np.uint8(255)).save(path, format="PNG")


def mask_paths(out_dir: Path | str, table_id: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    return out / f"{table_id}.row.png", out / f"{table_id}.col.png"
