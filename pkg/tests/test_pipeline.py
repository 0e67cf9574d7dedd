import math

import numpy as np
import pytest

from structaug.errors import ConfigError, EmptyDistributionError, ReplayError
from structaug.model import validate
from structaug.pipeline import (
    AugNode,
    Category,
    NodeSet,
    TreeConfig,
    build_distribution,
    categorize,
    categorize_doc,
    distribution_for,
    draw_category,
    explore_tree,
    gaussian_grid,
    global_frequency,
    load_node_set,
    node_frequency,
    node_set_bytes,
    replay_path,
    sample_node,
    save_node_set,
    training_stream,
    zero_grid,
)
from structaug.rng import Rng
from structaug.synth import make_table

from conftest import build_table


def one_hot(label: str) -> np.ndarray:
    grid = zero_grid()
    cat = Category.from_label(label)
    grid[cat.row_bin, cat.col_bin] = 1.0
    return grid


# ---------------------------------------------------------------------------
# categorization
# ---------------------------------------------------------------------------


def test_category_anchor_4_rows_5_cols_is_B2():
    assert categorize(4, 5).label == "B2"


def test_category_clamps_large_tables():
    assert categorize(20, 12).label == "E4"
    for cols in range(11, 30):
        assert categorize(1, cols).col_bin == 3
    for rows in range(15, 40):
        assert categorize(rows, 1).row_bin == 4


def test_category_minimum_is_A1():
    assert categorize(1, 1).label == "A1"


def test_category_is_total_and_monotone():
    prev_row_bin = 0
    for rows in range(1, 40):
        cat = categorize(rows, 1)
        assert cat.row_bin >= prev_row_bin
        prev_row_bin = cat.row_bin
    prev_col_bin = 0
    for cols in range(1, 40):
        cat = categorize(1, cols)
        assert cat.col_bin >= prev_col_bin
        prev_col_bin = cat.col_bin


def test_category_rejects_bad_counts():
    with pytest.raises(ConfigError):
        categorize(0, 3)


def test_category_label_round_trip():
    for b in range(5):
        for j in range(4):
            cat = Category(b, j)
            assert Category.from_label(cat.label) == cat


# ---------------------------------------------------------------------------
# tree exploration
# ---------------------------------------------------------------------------

SMALL_CFG = TreeConfig(
    max_width_by_depth={1: 3, 2: 2, 3: 1, 4: 1},
    keep_depth_min=2,
    keep_depth_max=4,
    seed=11,
)


def test_one_by_one_root_yields_empty_node_set():
    doc = build_table([0, 40], [0, 20])
    node_set = explore_tree(doc, SMALL_CFG, Rng(SMALL_CFG.seed))
    assert len(node_set) == 0


def test_tree_respects_width_schedule_and_retention():
    root = make_table(Rng(42), n_rows=5, n_cols=5)
    node_set, edges = explore_tree(root, SMALL_CFG, Rng(SMALL_CFG.seed), collect_all=True)
    for node in node_set.nodes:
        assert SMALL_CFG.keep_depth_min <= node.depth <= SMALL_CFG.keep_depth_max
        assert node.doc.width <= 1.5 * root.width
        assert node.doc.height <= 1.5 * root.height
        assert validate(node.doc).ok
        assert node.category == categorize_doc(node.doc)
    children_per_parent: dict[int, int] = {}
    for parent, _child in edges:
        children_per_parent[id(parent)] = children_per_parent.get(id(parent), 0) + 1
    for parent, child in edges:
        assert children_per_parent[id(parent)] <= SMALL_CFG.max_width_by_depth[child.depth]


def test_tree_is_deterministic():
    root = make_table(Rng(42), n_rows=4, n_cols=4)
    a = explore_tree(root, SMALL_CFG, Rng(7))
    b = explore_tree(root, SMALL_CFG, Rng(7))
    assert [n.path for n in a.nodes] == [n.path for n in b.nodes]
    assert [n.category for n in a.nodes] == [n.category for n in b.nodes]
    assert all(x.doc == y.doc for x, y in zip(a.nodes, b.nodes))


def test_default_config_matches_published_schedule():
    cfg = TreeConfig()
    assert cfg.max_width_by_depth == {1: 8, 2: 4, 3: 2, 4: 2, 5: 2, 6: 1, 7: 1, 8: 1, 9: 1, 10: 1}
    assert (cfg.keep_depth_min, cfg.keep_depth_max) == (6, 10)
    assert cfg.size_cap_factor == 1.5


def test_tree_config_validation():
    with pytest.raises(ConfigError):
        TreeConfig(max_width_by_depth={1: 0})
    with pytest.raises(ConfigError):
        TreeConfig(keep_depth_min=5, keep_depth_max=11)


def test_path_replay_reproduces_nodes():
    root = make_table(Rng(42), n_rows=5, n_cols=5)
    node_set = explore_tree(root, SMALL_CFG, Rng(3))
    assert node_set.nodes, "fixture should produce at least one node"
    for node in node_set.nodes:
        assert replay_path(root, node.path) == node.doc


def test_node_set_cache_round_trip(tmp_path):
    root = make_table(Rng(42), n_rows=5, n_cols=4)
    node_set = explore_tree(root, SMALL_CFG, Rng(5))
    path = tmp_path / "cache.json"
    save_node_set(node_set, path)
    assert node_set_bytes(node_set) == path.read_bytes()
    loaded = load_node_set(path, root)
    assert [n.path for n in loaded.nodes] == [n.path for n in node_set.nodes]
    assert all(a.doc == b.doc for a, b in zip(loaded.nodes, node_set.nodes))


def test_node_set_cache_rejects_wrong_root(tmp_path):
    root = make_table(Rng(42), n_rows=4, n_cols=4, table_id="right")
    other = make_table(Rng(43), n_rows=4, n_cols=4, table_id="wrong")
    node_set = explore_tree(root, SMALL_CFG, Rng(5))
    save_node_set(node_set, tmp_path / "c.json")
    with pytest.raises(ReplayError):
        load_node_set(tmp_path / "c.json", other)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def test_global_frequency_counts_categories():
    assert not global_frequency([]).any()
    doc = make_table(Rng(1), n_rows=4, n_cols=5)  # B2
    grid = global_frequency([doc])
    assert grid[1, 1] == 1.0 and grid.sum() == 1.0


def test_global_frequency_recount():
    rng = Rng(8)
    docs = [make_table(rng) for _ in range(10)]
    grid = global_frequency(docs)
    assert grid.sum() == 10.0
    recount = zero_grid()
    for d in docs:
        c = categorize(d.n_rows, d.n_cols)
        recount[c.row_bin, c.col_bin] += 1
    assert np.array_equal(grid, recount)


def test_node_frequency_counts_nodes():
    root = make_table(Rng(42), n_rows=5, n_cols=5)
    node_set = explore_tree(root, SMALL_CFG, Rng(2))
    grid = node_frequency(node_set)
    assert grid.sum() == len(node_set)
    empty = NodeSet(root_id="x", seed=0, config=SMALL_CFG, nodes=())
    assert not node_frequency(empty).any()


def test_gaussian_center_and_flat_limit():
    center = Category.from_label("C2")
    grid = gaussian_grid(center, 1.0)
    assert grid[center.row_bin, center.col_bin] == 1.0
    assert grid.max() == 1.0
    flat = gaussian_grid(center, 1e6)
    assert np.all(np.abs(flat - 1.0) < 1e-6)


def test_gaussian_value_at_distance():
    grid = gaussian_grid(Category.from_label("B2"), 1.0)
    a1 = Category.from_label("A1")
    assert grid[a1.row_bin, a1.col_bin] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_gaussian_rejects_bad_sigma():
    with pytest.raises(ConfigError):
        gaussian_grid(Category(0, 0), 0.0)


def test_distribution_one_hot():
    p = build_distribution(np.ones((5, 4)), np.ones((5, 4)), one_hot("D3"))
    d3 = Category.from_label("D3")
    assert p[d3.row_bin, d3.col_bin] == 1.0
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


def test_distribution_hand_normalized():
    fg = 2 * one_hot("B2") + one_hot("B3")
    fi = one_hot("B2") + one_hot("B3")
    p = build_distribution(np.ones((5, 4)), fg, fi)
    assert p[Category.from_label("B2").row_bin, Category.from_label("B2").col_bin] == pytest.approx(2 / 3)
    assert p[Category.from_label("B3").row_bin, Category.from_label("B3").col_bin] == pytest.approx(1 / 3)


def test_distribution_zero_where_node_frequency_zero():
    rng = Rng(12)
    for _ in range(50):
        gauss = np.abs(np.asarray([[rng.random() for _ in range(4)] for _ in range(5)]))
        fg = np.asarray([[float(rng.below(4)) for _ in range(4)] for _ in range(5)])
        fi = np.asarray([[float(rng.below(3)) for _ in range(4)] for _ in range(5)])
        if (gauss * fg * fi).sum() == 0:
            continue
        p = build_distribution(gauss, fg, fi)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(p[fi == 0] == 0)


def test_distribution_raises_when_product_vanishes():
    with pytest.raises(EmptyDistributionError):
        build_distribution(one_hot("A1"), one_hot("B2"), one_hot("C3"))


def test_distribution_scaling_invariance():
    rng = Rng(77)
    gauss = gaussian_grid(Category.from_label("B2"), 1.0)
    fg = np.asarray([[1.0 + rng.random() for _ in range(4)] for _ in range(5)])
    fi = np.asarray([[float(rng.below(3)) for _ in range(4)] for _ in range(5)])
    p = build_distribution(gauss, fg, fi)
    for scale in (0.25, 3.0, 1e6):
        assert np.allclose(build_distribution(gauss * scale, fg, fi), p, atol=1e-12)
        assert np.allclose(build_distribution(gauss, fg * scale, fi), p, atol=1e-12)
        assert np.allclose(build_distribution(gauss, fg, fi * scale), p, atol=1e-12)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _leaf_node(category: str, marker: int) -> AugNode:
    doc = build_table([0, 20 + marker], [0, 10], table_id=f"n{marker}")
    return AugNode(doc=doc, path=(), depth=0, category=Category.from_label(category))


def _node_set(nodes) -> NodeSet:
    return NodeSet(root_id="root", seed=0, config=TreeConfig(), nodes=tuple(nodes))


def test_sample_node_single_node():
    node = _leaf_node("B2", 1)
    node_set = _node_set([node])
    p = one_hot("B2")
    for seed in range(10):
        assert sample_node(node_set, p, Rng(seed)) is node


def test_sample_node_uniform_within_category():
    nodes = [_leaf_node("C1", i) for i in range(3)]
    node_set = _node_set(nodes)
    p = one_hot("C1")
    rng = Rng(2025)
    counts = [0, 0, 0]
    draws = 30_000
    for _ in range(draws):
        picked = sample_node(node_set, p, rng)
        counts[nodes.index(picked)] += 1
    for count in counts:
        assert abs(count / draws - 1 / 3) < 0.02


def test_sample_node_is_deterministic():
    nodes = [_leaf_node("C1", i) for i in range(5)] + [_leaf_node("A2", 9)]
    node_set = _node_set(nodes)
    p = build_distribution(np.ones((5, 4)), np.ones((5, 4)), node_frequency(node_set))
    seq_a = [sample_node(node_set, p, rng).doc.id for rng in [Rng(3)] for _ in range(20)]
    rng = Rng(3)
    seq_b = [sample_node(node_set, p, rng).doc.id for _ in range(20)]
    assert seq_a == seq_b


def test_sample_node_never_hits_zero_probability_category():
    nodes = [_leaf_node("C1", i) for i in range(3)] + [_leaf_node("D4", 7)]
    node_set = _node_set(nodes)
    p = one_hot("C1")
    rng = Rng(5)
    for _ in range(2000):
        assert sample_node(node_set, p, rng).category.label == "C1"


def test_draw_category_residue_falls_back_to_last_positive():
    p = one_hot("A1") * 0.5 + one_hot("E4") * 0.5
    assert draw_category(p, 0.999999999999999) == Category.from_label("E4")


def test_training_stream_p_augment_zero_yields_original():
    table = build_table([0, 30, 60], [0, 20, 40])
    node_set = _node_set([_leaf_node("A1", 1)])
    stream = training_stream(table, node_set, one_hot("A1"), Rng(1), p_augment=0.0)
    for _ in range(50):
        assert next(stream) is table


def test_training_stream_empty_node_set_falls_back():
    table = build_table([0, 30, 60], [0, 20, 40])
    empty = _node_set([])
    stream = training_stream(table, empty, None, Rng(1), p_augment=1.0)
    for _ in range(50):
        assert next(stream) is table


def test_training_stream_mixing_ratio():
    table = build_table([0, 30, 60], [0, 20, 40])
    node_set = _node_set([_leaf_node("A1", 1)])
    stream = training_stream(table, node_set, one_hot("A1"), Rng(9), p_augment=0.5)
    draws = 20_000
    originals = sum(1 for _ in range(draws) if next(stream) is table)
    assert abs(originals / draws - 0.5) < 0.02


def test_training_stream_rejects_bad_p_augment():
    table = build_table([0, 30], [0, 20])
    with pytest.raises(ConfigError):
        next(training_stream(table, _node_set([]), None, Rng(0), p_augment=1.5))


def test_distribution_for_empty_node_set_is_none():
    assert distribution_for(_node_set([]), np.ones((5, 4)), Category(0, 0), 1.0) is None
    # Vanishing product (global frequencies zero) also yields None.
    assert (
        distribution_for(_node_set([_leaf_node("A1", 1)]), zero_grid(), Category(0, 0), 1.0)
        is None
    )


def test_pinned_exp_reference_bits_and_accuracy():
    # Frozen bit patterns are the cross-implementation contract anchors.
    import struct

    from structaug.pipeline import pinned_exp

    expected = {
        0.0: "000000000000f03f",
        -0.5: "0c966ffcb268e33f",
        -1.0: "39ef2c36568bd73f",
        -2.5: "25f494c08503b53f",
        -12.5: "8fe6683fed42cf3e",
        -50.0: "40087e547d256d3b",
    }
    for x, bits in expected.items():
        assert struct.pack("<d", pinned_exp(x)).hex() == bits
    for k in range(0, 120):
        x = -k / 7.0
        assert pinned_exp(x) == pytest.approx(math.exp(x), rel=5e-15)
