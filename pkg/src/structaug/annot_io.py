"""Annotation parsing/serialization, dataset manifests and split management.

The canonical annotation format is JSON (schema below); an XML importer maps
separator-style ground truth produced by annotation tools into the same
schema.  All pixel values are integers.

    { "id": str, "imageWidth": int, "imageHeight": int,
      "columns": [{"x1": int, "x2": int}, ...],
      "rows":    [{"y1": int, "y2": int}, ...],
      "cells":   [{"startRow": int, "endRow": int, "startCol": int,
                   "endCol": int, "bbox": [x1, y1, x2, y2], "empty": bool}, ...] }
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import AnnotationError, ConfigError
from .model import Cell, ColumnBox, RowBox, TableDocument, validate
from .rng import DOMAIN_SPLIT, Rng, derive_seed

SNAP_TOLERANCE_PX = 2
SPLIT_NAMES = ("train", "test", "val")


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------


def _expect_int(obj, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise AnnotationError(f"{path}: expected an integer, got {obj!r}")
    return obj


def _snap_boundaries(pairs: list[tuple[int, int]], tolerance: int) -> list[tuple[int, int]]:
    """Snap adjacent near-tiling boundaries to their midpoint (floor).

    Gaps or overlaps larger than the tolerance are left alone and will be
    reported as validation errors downstream.
    """
    snapped = [list(p) for p in pairs]
    for i in range(len(snapped) - 1):
        gap = snapped[i + 1][0] - snapped[i][1]
        if gap != 0 and abs(gap) <= tolerance:
            boundary = (snapped[i][1] + snapped[i + 1][0]) // 2
            snapped[i][1] = boundary
            snapped[i + 1][0] = boundary
    return [(lo, hi) for lo, hi in snapped]


def _clamp_bbox(cell: Cell, columns: tuple[ColumnBox, ...], rows: tuple[RowBox, ...]) -> Cell:
    """Clamp a cell bbox into its spanned pixel region (boundary snapping can
    move region edges by a pixel or two)."""
    if not (
        0 <= cell.start_col <= cell.end_col < len(columns)
        and 0 <= cell.start_row <= cell.end_row < len(rows)
    ):
        return cell
    x_lo, x_hi = columns[cell.start_col].x1, columns[cell.end_col].x2
    y_lo, y_hi = rows[cell.start_row].y1, rows[cell.end_row].y2
    x1, y1, x2, y2 = cell.bbox
    nx1 = min(max(x1, x_lo), x_hi)
    nx2 = min(max(x2, x_lo), x_hi)
    ny1 = min(max(y1, y_lo), y_hi)
    ny2 = min(max(y2, y_lo), y_hi)
    if (nx1, ny1, nx2, ny2) == (x1, y1, x2, y2):
        return cell
    return replace(cell, bbox=(nx1, ny1, nx2, ny2))


def _build_document(
    doc_id: str,
    width: int,
    height: int,
    col_pairs: list[tuple[int, int]],
    row_pairs: list[tuple[int, int]],
    cells: list[Cell],
    image: np.ndarray | None,
) -> TableDocument:
    col_pairs = _snap_boundaries(col_pairs, SNAP_TOLERANCE_PX)
    row_pairs = _snap_boundaries(row_pairs, SNAP_TOLERANCE_PX)
    columns = tuple(ColumnBox(lo, hi) for lo, hi in col_pairs)
    rows = tuple(RowBox(lo, hi) for lo, hi in row_pairs)
    cells = [_clamp_bbox(c, columns, rows) for c in cells]

    if image is None:
        image = np.full((height, width), 255, dtype=np.uint8)
    elif image.shape[0] != height or image.shape[1] != width:
        raise AnnotationError(
            f"image is {image.shape[1]}x{image.shape[0]} but the annotation "
            f"declares {width}x{height}"
        )

    doc = TableDocument(id=doc_id, image=image, columns=columns, rows=rows, cells=tuple(cells))
    report = validate(doc)
    if not report.ok:
        raise AnnotationError(
            "annotation violates table invariants: " + "; ".join(str(v) for v in report.violations)
        )
    return doc


def parse_annotation(data: bytes | str, image: np.ndarray | None = None) -> TableDocument:
    """Parse canonical JSON (or, when the payload is XML, import the first
    table) into a validated document.

    When no pixel data is supplied the document gets a white canvas of the
    declared size; loaders attach the real raster via ``image=``.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    if text.lstrip().startswith("<"):
        docs = import_separator_xml(text, image=image)
        if not docs:
            raise AnnotationError("XML annotation contains no table element")
        return docs[0]

    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationError(
            f"annotation parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc

    try:
        doc_id = str(obj["id"])
        width = _expect_int(obj["imageWidth"], "imageWidth")
        height = _expect_int(obj["imageHeight"], "imageHeight")
        col_pairs = [
            (_expect_int(c["x1"], "columns[].x1"), _expect_int(c["x2"], "columns[].x2"))
            for c in obj["columns"]
        ]
        row_pairs = [
            (_expect_int(r["y1"], "rows[].y1"), _expect_int(r["y2"], "rows[].y2"))
            for r in obj["rows"]
        ]
        cells = []
        for c in obj["cells"]:
            bbox = c["bbox"]
            if not (isinstance(bbox, list) and len(bbox) == 4):
                raise AnnotationError(f"cells[].bbox must be [x1, y1, x2, y2], got {bbox!r}")
            cells.append(
                Cell(
                    start_row=_expect_int(c["startRow"], "cells[].startRow"),
                    end_row=_expect_int(c["endRow"], "cells[].endRow"),
                    start_col=_expect_int(c["startCol"], "cells[].startCol"),
                    end_col=_expect_int(c["endCol"], "cells[].endCol"),
                    bbox=tuple(_expect_int(v, "cells[].bbox[]") for v in bbox),
                    empty=bool(c.get("empty", False)),
                )
            )
    except (KeyError, TypeError) as exc:
        raise AnnotationError(f"annotation is missing or mistypes a required field: {exc}") from exc

    return _build_document(doc_id, width, height, col_pairs, row_pairs, cells, image)


def annotation_object(doc: TableDocument) -> dict:
    """The canonical JSON object for a document (fixed key order)."""
    return {
        "id": doc.id,
        "imageWidth": doc.width,
        "imageHeight": doc.height,
        "columns": [{"x1": c.x1, "x2": c.x2} for c in doc.columns],
        "rows": [{"y1": r.y1, "y2": r.y2} for r in doc.rows],
        "cells": [
            {
                "startRow": c.start_row,
                "endRow": c.end_row,
                "startCol": c.start_col,
                "endCol": c.end_col,
                "bbox": list(c.bbox),
                "empty": c.empty,
            }
            for c in doc.cells
        ],
    }


def serialize_annotation(doc: TableDocument) -> bytes:
    """Canonical JSON bytes; deterministic formatting, trailing newline."""
    report = validate(doc)
    if not report.ok:
        raise AnnotationError(
            "refusing to serialize an invalid document: "
            + "; ".join(str(v) for v in report.violations)
        )
    return (json.dumps(annotation_object(doc), indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# XML import (separator-style ground truth)
# ---------------------------------------------------------------------------


def import_separator_xml(data: bytes | str, image: np.ndarray | None = None) -> list[TableDocument]:
    """Import separator-style XML ground truth.

    Expected elements (see docs/formats.md): ``<Table>`` with page-coordinate
    bounds x1/y1/x2/y2, child ``<Row y=.../>`` and ``<Column x=.../>``
    internal separators, and ``<Cell>`` elements carrying span attributes
    startRow/endRow/startCol/endCol plus a content bbox.  Cells flagged
    ``dontCare="true"`` map to empty cells.  Coordinates are shifted so each
    table starts at (0, 0).
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        pos = getattr(exc, "position", (0, 0))
        raise AnnotationError(
            f"annotation parse error at line {pos[0]}, column {pos[1]}: {exc}"
        ) from exc

    tables = [root] if root.tag == "Table" else list(root.iter("Table"))
    docs = []
    for index, node in enumerate(tables):
        try:
            tx1 = int(node.attrib["x1"])
            ty1 = int(node.attrib["y1"])
            tx2 = int(node.attrib["x2"])
            ty2 = int(node.attrib["y2"])
        except (KeyError, ValueError) as exc:
            raise AnnotationError(f"Table element is missing integer bounds: {exc}") from exc
        doc_id = node.attrib.get("id", f"table-{index}")

        col_seps = sorted(int(el.attrib["x"]) - tx1 for el in node.iter("Column"))
        row_seps = sorted(int(el.attrib["y"]) - ty1 for el in node.iter("Row"))
        col_edges = [0, *col_seps, tx2 - tx1]
        row_edges = [0, *row_seps, ty2 - ty1]
        col_pairs = list(zip(col_edges[:-1], col_edges[1:]))
        row_pairs = list(zip(row_edges[:-1], row_edges[1:]))

        cells = []
        for el in node.iter("Cell"):
            try:
                cells.append(
                    Cell(
                        start_row=int(el.attrib["startRow"]),
                        end_row=int(el.attrib["endRow"]),
                        start_col=int(el.attrib["startCol"]),
                        end_col=int(el.attrib["endCol"]),
                        bbox=(
                            int(el.attrib["x1"]) - tx1,
                            int(el.attrib["y1"]) - ty1,
                            int(el.attrib["x2"]) - tx1,
                            int(el.attrib["y2"]) - ty1,
                        ),
                        empty=el.attrib.get("dontCare", "false").lower() == "true",
                    )
                )
            except (KeyError, ValueError) as exc:
                raise AnnotationError(f"Cell element is missing an attribute: {exc}") from exc

        docs.append(
            _build_document(doc_id, tx2 - tx1, ty2 - ty1, col_pairs, row_pairs, cells, image)
        )
    return docs


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------


def load_image(path: Path | str) -> np.ndarray:
    """Load a PNG as uint8 grayscale (H, W) or RGB (H, W, 3)."""
    with Image.open(path) as img:
        if img.mode == "L":
            return np.asarray(img, dtype=np.uint8)
        if img.mode != "RGB":
            img = img.convert("RGB")
        return np.asarray(img, dtype=np.uint8)


def save_image(image: np.ndarray, path: Path | str) -> None:
    Image.fromarray(image).save(path, format="PNG")


# ---------------------------------------------------------------------------
# manifests and splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image: str
    annotation: str
    split: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    base_dir: Path | None = None

    def __post_init__(self) -> None:
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ConfigError(f"duplicate table ids in manifest: {dup}")

    def resolve(self, rel: str) -> Path:
        return (self.base_dir / rel) if self.base_dir is not None else Path(rel)

    def by_split(self, split: str) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)

    def train_entries(self) -> tuple[ManifestEntry, ...]:
        """Entries used for training: the train split, or every entry when no
        split has been assigned yet."""
        if any(e.split is not None for e in self.entries):
            return self.by_split("train")
        return self.entries


def load_manifest(path: Path | str, check_files: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        items = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"manifest parse error in {path}: {exc}") from exc
    if not isinstance(items, list):
        raise AnnotationError(f"manifest {path} must be a JSON list")
    entries = []
    for obj in items:
        split = obj.get("split")
        if split is not None and split not in SPLIT_NAMES:
            raise AnnotationError(f"unknown split {split!r} for table {obj.get('id')!r}")
        entries.append(
            ManifestEntry(
                id=str(obj["id"]),
                image=str(obj["image"]),
                annotation=str(obj["annotation"]),
                split=split,
            )
        )
    manifest = DatasetManifest(entries=tuple(entries), base_dir=path.parent)
    if check_files:
        for e in manifest.entries:
            for rel in (e.image, e.annotation):
                if not manifest.resolve(rel).exists():
                    raise AnnotationError(f"manifest references a missing file: {rel}")
    return manifest


def manifest_bytes(manifest: DatasetManifest) -> bytes:
    items = []
    for e in manifest.entries:
        obj = {"id": e.id, "image": e.image, "annotation": e.annotation}
        if e.split is not None:
            obj["split"] = e.split
        items.append(obj)
    return (json.dumps(items, indent=2) + "\n").encode("utf-8")


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    Path(path).write_bytes(manifest_bytes(manifest))


def rebase_manifest(manifest: DatasetManifest, new_dir: Path | str) -> DatasetManifest:
    """Rewrite entry paths so they stay valid relative to ``new_dir``."""
    import os

    new_dir = Path(new_dir)
    if manifest.base_dir is None or Path(manifest.base_dir).resolve() == new_dir.resolve():
        return manifest
    entries = tuple(
        replace(
            e,
            image=os.path.relpath(manifest.resolve(e.image), new_dir),
            annotation=os.path.relpath(manifest.resolve(e.annotation), new_dir),
        )
        for e in manifest.entries
    )
    return DatasetManifest(entries=entries, base_dir=new_dir)


def load_document(manifest: DatasetManifest, entry: ManifestEntry) -> TableDocument:
    """Load one entry's annotation with its raster attached."""
    image = load_image(manifest.resolve(entry.image))
    data = manifest.resolve(entry.annotation).read_bytes()
    return parse_annotation(data, image=image)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test/validation proportions plus the seed that fixes the
    assignment."""

    ratios: tuple[float, float, float] = (0.72, 0.2, 0.08)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ConfigError(f"ratios must be three non-negative reals, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(self.ratios)}")


def page_key(table_id: str) -> str:
    """Tables from the same page share the prefix before the last underscore;
    ids without an underscore are their own page."""
    if "_" in table_id:
        return table_id.rsplit("_", 1)[0]
    return table_id


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def split_dataset(manifest: DatasetManifest, spec: SplitSpec) -> DatasetManifest:
    """Assign every entry to train/test/val.

    Target counts are round(N * ratio) with the rounding remainder absorbed
    by train; assignment is a pure function of (seed, sorted table ids) and
    keeps all tables of a page in the same split.
    """
    if not manifest.entries:
        raise ConfigError("cannot split an empty manifest")
    n = len(manifest.entries)
    target_test = _round_half_up(n * spec.ratios[1])
    target_val = _round_half_up(n * spec.ratios[2])

    pages: dict[str, list[str]] = {}
    for table_id in sorted(e.id for e in manifest.entries):
        pages.setdefault(page_key(table_id), []).append(table_id)
    page_order = sorted(pages)
    Rng(derive_seed(spec.seed, DOMAIN_SPLIT)).shuffle(page_order)

    assignment: dict[str, str] = {}
    n_test = n_val = 0
    for key in page_order:
        ids = pages[key]
        if n_test < target_test:
            split = "test"
            n_test += len(ids)
        elif n_val < target_val:
            split = "val"
            n_val += len(ids)
        else:
            split = "train"
        for table_id in ids:
            assignment[table_id] = split

    return DatasetManifest(
        entries=tuple(replace(e, split=assignment[e.id]) for e in manifest.entries),
        base_dir=manifest.base_dir,
    )


def training_fraction(manifest: DatasetManifest, fraction: float, seed: int) -> DatasetManifest:
    """Keep a deterministic ceil(fraction * |train|) subset of the train
    split; test and val entries are untouched."""
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"training fraction must be in (0, 1], got {fraction}")
    train_ids = sorted(e.id for e in manifest.entries if e.split == "train")
    if not train_ids:
        raise ConfigError("manifest has no train split; run split first")
    keep_count = math.ceil(fraction * len(train_ids) - 1e-9)
    order = list(train_ids)
    Rng(derive_seed(seed, DOMAIN_SPLIT, "fraction")).shuffle(order)
    kept = set(order[:keep_count])
    return DatasetManifest(
        entries=tuple(e for e in manifest.entries if e.split != "train" or e.id in kept),
        base_dir=manifest.base_dir,
    )
