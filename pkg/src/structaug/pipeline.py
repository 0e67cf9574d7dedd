"""Pre-computed augmentation trees and the data-driven sampling model.

For each source table a pruned breadth-first tree of augmented variants is
explored once, up front.  Tables and variants are bucketed into a 5x4
category grid by (row count, column count); sampling then draws a category
from the normalized elementwise product of three 5x4 grids - a Gaussian
around the source table's own category, the global category frequencies of
the training tables, and the per-table frequencies of its variants - and
finally a uniform variant within the drawn category.

Variant sets are persisted as operation paths plus a seed, never as pixels;
replaying a path against the root document reproduces the variant exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, EmptyDistributionError, ReplayError, StructAugError
from .model import TableDocument
from .ops import OpOutcome, OpRecord, apply_random_op, replay_record
from .rng import Rng

ROW_BIN_NAMES = "ABCDE"
N_ROW_BINS = 5
N_COL_BINS = 4

# Upper bounds (inclusive) of the finite bins; the last bin on each axis is
# open-ended.  Rows: A=[1,3] B=[4,6] C=[7,9] D=[10,12] E=[13,inf);
# columns: 1=[1,3] 2=[4,6] 3=[7,8] 4=[9,inf).
DEFAULT_ROW_BIN_EDGES = (3, 6, 9, 12)
DEFAULT_COL_BIN_EDGES = (3, 6, 8)

# One tree-slot may retry this many times when an attempt aborts or busts the
# size cap before the slot is forfeited.
ATTEMPTS_PER_SLOT = 3


@dataclass(frozen=True, order=True)
class Category:
    """One cell of the 5x4 category grid (row_bin 0..4 = A..E, col_bin 0..3 =
    1..4)."""

    row_bin: int
    col_bin: int

    @property
    def label(self) -> str:
        return f"{ROW_BIN_NAMES[self.row_bin]}{self.col_bin + 1}"

    @classmethod
    def from_label(cls, label: str) -> "Category":
        row_bin = ROW_BIN_NAMES.index(label[0])
        col_bin = int(label[1:]) - 1
        if not (0 <= col_bin < N_COL_BINS):
            raise ValueError(f"bad category label {label!r}")
        return cls(row_bin, col_bin)


def _bin_of(count: int, edges: Sequence[int]) -> int:
    for i, edge in enumerate(edges):
        if count <= edge:
            return i
    return len(edges)


def categorize(
    row_count: int,
    col_count: int,
    row_edges: Sequence[int] = DEFAULT_ROW_BIN_EDGES,
    col_edges: Sequence[int] = DEFAULT_COL_BIN_EDGES,
) -> Category:
    """Map a (row count, column count) pair to its grid category.

    Total and monotone: every pair with counts >= 1 maps to exactly one
    category, and increasing a count never decreases its bin.
    """
    if row_count < 1 or col_count < 1:
        raise ConfigError(f"counts must be >= 1, got {row_count} rows, {col_count} columns")
    return Category(_bin_of(row_count, row_edges), _bin_of(col_count, col_edges))


def categorize_doc(doc: TableDocument) -> Category:
    return categorize(doc.n_rows, doc.n_cols)


@dataclass(frozen=True)
class TreeConfig:
    """Pruning limits for the per-table exploration tree."""

    max_width_by_depth: dict[int, int] = field(
        default_factory=lambda: {1: 8, 2: 4, 3: 2, 4: 2, 5: 2, 6: 1, 7: 1, 8: 1, 9: 1, 10: 1}
    )
    keep_depth_min: int = 6
    keep_depth_max: int = 10
    size_cap_factor: float = 1.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.max_width_by_depth:
            raise ConfigError("max_width_by_depth must not be empty")
        if any(w < 1 for w in self.max_width_by_depth.values()):
            raise ConfigError("tree widths must be positive")
        if not (1 <= self.keep_depth_min <= self.keep_depth_max <= max(self.max_width_by_depth)):
            raise ConfigError(
                f"retention interval [{self.keep_depth_min}, {self.keep_depth_max}] must lie "
                f"within the scheduled depths (1..{max(self.max_width_by_depth)})"
            )
        if self.size_cap_factor <= 0:
            raise ConfigError("size_cap_factor must be positive")

    def to_json(self) -> dict:
        return {
            "maxWidthByDepth": {str(k): v for k, v in sorted(self.max_width_by_depth.items())},
            "keepDepthMin": self.keep_depth_min,
            "keepDepthMax": self.keep_depth_max,
            "sizeCapFactor": self.size_cap_factor,
        }

    @classmethod
    def from_json(cls, obj: dict, seed: int = 0) -> "TreeConfig":
        return cls(
            max_width_by_depth={int(k): int(v) for k, v in obj["maxWidthByDepth"].items()},
            keep_depth_min=int(obj["keepDepthMin"]),
            keep_depth_max=int(obj["keepDepthMax"]),
            size_cap_factor=float(obj["sizeCapFactor"]),
            seed=seed,
        )


@dataclass(frozen=True)
class AugNode:
    """One augmented variant: its document, the operation path that produced
    it from the root, and bookkeeping."""

    doc: TableDocument
    path: tuple[OpRecord, ...]
    depth: int
    category: Category

    def __post_init__(self) -> None:
        if self.depth != len(self.path):
            raise StructAugError("node depth must equal its path length")


@dataclass(frozen=True)
class NodeSet:
    """The pruned variant sample set of one root table."""

    root_id: str
    seed: int
    config: TreeConfig
    nodes: tuple[AugNode, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def by_category(self) -> dict[Category, list[int]]:
        cached = getattr(self, "_category_groups", None)
        if cached is None:
            cached = {}
            for i, node in enumerate(self.nodes):
                cached.setdefault(node.category, []).append(i)
            object.__setattr__(self, "_category_groups", cached)
        return cached


def _within_cap(doc: TableDocument, root: TableDocument, factor: float) -> bool:
    return doc.width <= factor * root.width and doc.height <= factor * root.height


def explore_tree(
    root: TableDocument,
    cfg: TreeConfig,
    rng: Rng,
    collect_all: bool = False,
) -> NodeSet | tuple[NodeSet, list[tuple[AugNode, AugNode]]]:
    """Breadth-first exploration with per-depth width limits.

    At depth k every surviving node attempts up to ``max_width_by_depth[k]``
    children; an attempt that aborts or exceeds the size cap is retried up to
    ATTEMPTS_PER_SLOT times and then forfeited.  Only nodes with depth inside
    the retention interval are returned.  ``collect_all`` additionally
    returns every (parent, child) expansion edge (diagnostics and tests).
    """
    frontier: list[AugNode] = [AugNode(root, (), 0, categorize_doc(root))]
    kept: list[AugNode] = []
    edges: list[tuple[AugNode, AugNode]] = []
    for depth in range(1, cfg.keep_depth_max + 1):
        width = cfg.max_width_by_depth.get(depth, 0)
        next_frontier: list[AugNode] = []
        for node in frontier:
            for _slot in range(width):
                for _attempt in range(ATTEMPTS_PER_SLOT):
                    outcome: OpOutcome = apply_random_op(node.doc, rng)
                    if not outcome.ok:
                        continue
                    if not _within_cap(outcome.doc, root, cfg.size_cap_factor):
                        continue
                    assert outcome.record is not None
                    child = AugNode(
                        doc=outcome.doc,
                        path=node.path + (outcome.record,),
                        depth=depth,
                        category=categorize_doc(outcome.doc),
                    )
                    next_frontier.append(child)
                    edges.append((node, child))
                    break
        frontier = next_frontier
        if cfg.keep_depth_min <= depth <= cfg.keep_depth_max:
            kept.extend(frontier)
    node_set = NodeSet(root_id=root.id, seed=cfg.seed, config=cfg, nodes=tuple(kept))
    if collect_all:
        return node_set, edges
    return node_set


def replay_path(root: TableDocument, path: Sequence[OpRecord]) -> TableDocument:
    doc = root
    for record in path:
        try:
            doc = replay_record(doc, record)
        except StructAugError as exc:
            raise ReplayError(f"path replay failed on {record}: {exc}") from exc
    return doc


# ---------------------------------------------------------------------------
# node-set cache files
# ---------------------------------------------------------------------------


def node_set_bytes(node_set: NodeSet) -> bytes:
    obj = {
        "rootId": node_set.root_id,
        "seed": node_set.seed,
        "config": node_set.config.to_json(),
        "empty": len(node_set.nodes) == 0,
        "nodes": [
            {
                "path": [r.to_json() for r in node.path],
                "depth": node.depth,
                "category": node.category.label,
            }
            for node in node_set.nodes
        ],
    }
    return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


def save_node_set(node_set: NodeSet, path: Path | str) -> None:
    Path(path).write_bytes(node_set_bytes(node_set))


def load_node_set(path: Path | str, root: TableDocument) -> NodeSet:
    """Load a cache file and materialize every node by replaying its path
    against the root document."""
    obj = json.loads(Path(path).read_text("utf-8"))
    if obj["rootId"] != root.id:
        raise ReplayError(f"cache {path} belongs to {obj['rootId']!r}, not {root.id!r}")
    cfg = TreeConfig.from_json(obj["config"], seed=int(obj["seed"]))
    nodes = []
    for entry in obj["nodes"]:
        path_records = tuple(OpRecord.from_json(r) for r in entry["path"])
        doc = replay_path(root, path_records)
        node = AugNode(
            doc=doc,
            path=path_records,
            depth=int(entry["depth"]),
            category=Category.from_label(entry["category"]),
        )
        if node.category != categorize_doc(doc):
            raise ReplayError(f"cache {path}: replayed category disagrees with stored category")
        nodes.append(node)
    return NodeSet(root_id=root.id, seed=int(obj["seed"]), config=cfg, nodes=tuple(nodes))


# ---------------------------------------------------------------------------
# category grids and sampling
# ---------------------------------------------------------------------------


def zero_grid() -> np.ndarray:
    return np.zeros((N_ROW_BINS, N_COL_BINS), dtype=np.float64)


def global_frequency(tables: Sequence[TableDocument]) -> np.ndarray:
    """Counts of tables per category (the dataset-wide 5x4 frequency grid)."""
    grid = zero_grid()
    for doc in tables:
        cat = categorize_doc(doc)
        grid[cat.row_bin, cat.col_bin] += 1.0
    return grid


def global_frequency_from_counts(shapes: Sequence[tuple[int, int]]) -> np.ndarray:
    grid = zero_grid()
    for rows, cols in shapes:
        cat = categorize(rows, cols)
        grid[cat.row_bin, cat.col_bin] += 1.0
    return grid


def node_frequency(node_set: NodeSet) -> np.ndarray:
    grid = zero_grid()
    for node in node_set.nodes:
        grid[node.category.row_bin, node.category.col_bin] += 1.0
    return grid


# Platform libm exp() implementations disagree in the last ulp, which would
# leak into the sampling distribution and break the cross-implementation
# draw-sequence contract.  The weight kernel therefore uses a pinned exp
# built from IEEE-754 basic operations only (fixed op order), which is
# bit-identical in any compliant double arithmetic.  Accuracy ~1e-17.
_INV_LN2 = 1.4426950408889634
_LN2_HI = 0.6931471803691238
_LN2_LO = 1.9082149292705877e-10
_EXP_TERMS = 13


def _product_pow2(value: float, n: int) -> float:
    """value * 2^n by repeated halving/doubling of the value itself.  Each
    step is a correctly rounded IEEE op (exact outside the subnormal range),
    so the step order doubles as the cross-implementation contract."""
    for _ in range(n):
        value *= 2.0
    for _ in range(-n):
        value *= 0.5
        if value == 0.0:
            break
    return value


def pinned_exp(x: float) -> float:
    """Deterministic exp for non-positive arguments: range reduction by ln 2
    followed by a fixed-length Taylor sum.  Every operation is a correctly
    rounded IEEE double op, so any implementation reproduces it exactly."""
    n = math.floor(x * _INV_LN2 + 0.5)
    r = (x - n * _LN2_HI) - n * _LN2_LO
    term = 1.0
    acc = 1.0
    for k in range(1, _EXP_TERMS + 1):
        term = term * r / k
        acc += term
    return _product_pow2(acc, int(n))


def gaussian_grid(center: Category, sigma: float) -> np.ndarray:
    """Unnormalized 2-D Gaussian over the grid, value 1 at the center cell."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    grid = zero_grid()
    for b in range(N_ROW_BINS):
        for j in range(N_COL_BINS):
            dist_sq = (b - center.row_bin) ** 2 + (j - center.col_bin) ** 2
            grid[b, j] = pinned_exp(-dist_sq / (2.0 * sigma * sigma))
    return grid


def build_distribution(gauss: np.ndarray, fg: np.ndarray, fi: np.ndarray) -> np.ndarray:
    """Normalized elementwise product of the three grids.

    Raises EmptyDistributionError when the product vanishes everywhere; the
    caller then falls back to the unaugmented table.
    """
    product = gauss * fg * fi
    # Sequential row-major sum: the normalization is part of the documented
    # reproducibility contract, so no pairwise-summation reordering here.
    total = 0.0
    for value in product.flat:
        total += float(value)
    if total <= 0.0:
        raise EmptyDistributionError("all category weights are zero")
    return product / total


def distribution_for(
    node_set: NodeSet, fg: np.ndarray, center: Category, sigma: float
) -> np.ndarray | None:
    """Sampling distribution for one table, or None when nothing can be
    sampled (empty node set or vanished weights)."""
    if not node_set.nodes:
        return None
    try:
        return build_distribution(gaussian_grid(center, sigma), fg, node_frequency(node_set))
    except EmptyDistributionError:
        return None


def draw_category(p: np.ndarray, u: float) -> Category:
    """Invert the CDF of the flattened grid (row-major) at u."""
    cum = 0.0
    last_positive: Category | None = None
    for b in range(N_ROW_BINS):
        for j in range(N_COL_BINS):
            weight = float(p[b, j])
            if weight <= 0.0:
                continue
            cum += weight
            last_positive = Category(b, j)
            if u < cum:
                return last_positive
    if last_positive is None:
        raise EmptyDistributionError("probability grid has no positive mass")
    return last_positive  # float residue: u landed past the accumulated total


def sample_node(node_set: NodeSet, p: np.ndarray, rng: Rng) -> AugNode:
    """Draw a category from p, then a uniform node within the category."""
    if not node_set.nodes:
        raise StructAugError("cannot sample from an empty node set")
    category = draw_category(p, rng.random())
    indices = node_set.by_category().get(category)
    if not indices:
        raise StructAugError(
            f"probability grid puts mass on category {category.label} "
            "which has no nodes; the distribution was built against a different node set"
        )
    return node_set.nodes[indices[rng.below(len(indices))]]


def training_stream(
    table: TableDocument,
    node_set: NodeSet,
    p: np.ndarray | None,
    rng: Rng,
    p_augment: float = 0.5,
) -> Iterator[TableDocument]:
    """Endless stream of training documents.

    Each draw consumes one coin flip; with probability ``p_augment`` (and a
    samplable node set) it yields an augmented variant, otherwise the
    original table.  Category and node draws are only consumed when a variant
    is actually sampled, which keeps the draw sequence reproducible by
    external consumers.
    """
    if not (0.0 <= p_augment <= 1.0):
        raise ConfigError(f"p_augment must be in [0, 1], got {p_augment}")
    can_augment = len(node_set.nodes) > 0 and p is not None
    while True:
        u = rng.random()
        if can_augment and u < p_augment:
            yield sample_node(node_set, p, rng).doc
        else:
            yield table
