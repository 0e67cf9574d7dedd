import numpy as np
import pytest

from structaug.errors import CanvasMismatchError
from structaug.metrics import (
    KindReport,
    SegmentationReport,
    SegmentSet,
    cell_segments,
    column_segments,
    correct_detections,
    correspondence,
    evaluate,
    over_segmentations,
    row_segments,
    under_segmentations,
)
from structaug.rng import Rng
from structaug.synth import make_table

from conftest import build_table
from grid_fixtures import perturbed_doc, random_grid_doc
from pixel_oracle import oracle_counts, oracle_matrix

T = 0.1


def segs(rects, canvas=(100, 100), kind="column"):
    return SegmentSet(kind, canvas, tuple(rects))


# ---------------------------------------------------------------------------
# correspondence matrix
# ---------------------------------------------------------------------------


def test_identical_single_segments():
    a = segs([(0, 0, 10, 10)])
    assert correspondence(a, a).tolist() == [[100]]


def test_disjoint_segments_zero_matrix():
    gt = segs([(0, 0, 10, 10)])
    pred = segs([(50, 50, 60, 60)])
    assert correspondence(gt, pred).tolist() == [[0]]


def test_split_column_areas():
    gt = segs([(0, 0, 100, 10)])
    pred = segs([(0, 0, 60, 10), (60, 0, 100, 10)])
    assert correspondence(gt, pred).tolist() == [[600, 400]]


def test_correspondence_equals_pixel_oracle_on_random_rects():
    rng = Rng(401)
    for _ in range(50):
        def rand_rects(n):
            rects = []
            for _ in range(n):
                x1 = rng.below(90)
                y1 = rng.below(90)
                rects.append((x1, y1, x1 + 1 + rng.below(99 - x1), y1 + 1 + rng.below(99 - y1)))
            return rects

        gt = segs(rand_rects(1 + rng.below(5)))
        pred = segs(rand_rects(1 + rng.below(5)))
        assert np.array_equal(correspondence(gt, pred), oracle_matrix(gt, pred))


def test_canvas_mismatch_rejected():
    with pytest.raises(CanvasMismatchError):
        correspondence(segs([(0, 0, 5, 5)], canvas=(10, 10)), segs([(0, 0, 5, 5)], canvas=(20, 20)))


# ---------------------------------------------------------------------------
# the three rules on hand matrices
# ---------------------------------------------------------------------------


def test_identity_matching_counts_all_correct():
    matrix = np.diag([100, 200, 300])
    assert correct_detections(matrix, [100, 200, 300], T) == 3


def test_major_overlap_with_clean_partner_is_correct():
    matrix = np.array([[950, 50], [0, 1000]])
    assert correct_detections(matrix, [1000, 1000], T) == 2


def test_partner_with_foreign_significant_overlap_is_not_correct():
    # GT 0 has a 95% partner, but that partner also overlaps GT 1 at 15%,
    # killing the one-to-one requirement; GT 1 has no major partner at all.
    # Only GT 2 (clean full overlap) counts.
    matrix = np.array([[950, 50, 0], [150, 850, 0], [0, 0, 1000]])
    assert correct_detections(matrix, [1000, 1000, 1000], T) == 1


def test_exact_threshold_boundaries_do_not_qualify():
    # ratio == 1-T is not a major overlap; ratio == T is not "below T".
    matrix = np.array([[900, 100]])
    assert correct_detections(matrix, [1000], T) == 0
    matrix = np.array([[900, 0], [100, 900]])
    # GT1 overlaps pred 0 at exactly T=0.1: not strictly below T, kills the
    # one-to-one condition for GT 0.
    assert correct_detections(matrix, [1000, 1000], T) == 0


def test_over_segmentation_requires_two_partials():
    assert over_segmentations(np.array([[600, 400]]), [1000], T) == 1
    assert over_segmentations(np.array([[950, 50]]), [1000], T) == 0
    assert over_segmentations(np.array([[950, 50, 0]]), [1000], T) == 0


def test_under_segmentation_requires_two_partials():
    matrix = np.array([[500], [500]])
    assert under_segmentations(matrix, [1000, 1000], T) == 1
    assert under_segmentations(np.diag([1000, 1000]), [1000, 1000], T) == 0
    matrix = np.array([[950], [50]])
    assert under_segmentations(matrix, [1000, 1000], T) == 0


# ---------------------------------------------------------------------------
# evaluate on documents
# ---------------------------------------------------------------------------


def test_perfect_prediction_all_kinds():
    doc = build_table([0, 30, 60, 90], [0, 20, 40], spans=[(0, 0, 1, 2)])
    report = evaluate(doc, doc)
    for kind in ("row", "column", "cell"):
        k = report.kind(kind)
        assert k.correct == k.gt_count
        assert k.correct_pct == 100.0
        assert k.over_seg == 0 and k.under_seg == 0


def test_merged_columns_fixture():
    # GT has 4 columns; the prediction merges the last two exactly.  The two
    # swallowed GT columns lose their one-to-one mapping (the merged pred
    # overlaps both fully), and full containment is not a *partial* overlap,
    # so neither over- nor under-segmentation fires.
    gt = build_table([0, 40, 80, 120, 160], [0, 20])
    pred = build_table([0, 40, 80, 160], [0, 20], table_id="pred")
    report = evaluate(gt, pred)
    assert report.column.gt_count == 4
    assert report.column.correct == 2
    assert report.column.over_seg == 0
    assert report.column.under_seg == 0
    # The pixel oracle agrees.
    assert oracle_counts(column_segments(gt), column_segments(pred), T) == (2, 0, 0)


def test_straddling_prediction_is_under_segmentation():
    # One pred column covers half of GT C1, all of C2, half of C3.
    gt = build_table([0, 60, 120, 180], [0, 20])
    pred = build_table([0, 30, 150, 180], [0, 20], table_id="pred")
    report = evaluate(gt, pred)
    assert report.column.correct == 0
    assert report.column.over_seg == 2  # C1 and C3 split 50/50
    assert report.column.under_seg == 1  # middle pred straddles C1 and C3
    assert oracle_counts(column_segments(gt), column_segments(pred), T) == (0, 2, 1)


def test_evaluate_rejects_canvas_mismatch():
    gt = build_table([0, 30], [0, 20])
    pred = build_table([0, 40], [0, 20], table_id="p")
    with pytest.raises(CanvasMismatchError):
        evaluate(gt, pred)


def test_report_percentages_and_json():
    report = KindReport(gt_count=3, correct=2, over_seg=1, under_seg=0)
    assert report.correct_pct == pytest.approx(200 / 3)
    obj = report.to_json()
    assert obj["correctPct"] == 66.67
    assert obj["gtCount"] == 3


def test_report_merging_pools_counts():
    a = KindReport(4, 4, 0, 0)
    b = KindReport(6, 3, 1, 2)
    merged = KindReport.merged([a, b])
    assert (merged.gt_count, merged.correct) == (10, 7)
    assert merged.correct_pct == 70.0


def test_metrics_invariant_under_translation_and_permutation():
    rng = Rng(31)
    gt_rects = [(5, 5, 30, 25), (30, 5, 60, 25), (60, 5, 80, 25)]
    pred_rects = [(5, 5, 33, 25), (33, 5, 80, 25)]
    base = oracle = None
    for dx, dy in ((0, 0), (7, 11)):
        gt = segs([(x1 + dx, y1 + dy, x2 + dx, y2 + dy) for x1, y1, x2, y2 in gt_rects])
        pred = segs([(x1 + dx, y1 + dy, x2 + dx, y2 + dy) for x1, y1, x2, y2 in pred_rects])
        matrix = correspondence(gt, pred)
        counts = (
            correct_detections(matrix, gt.areas(), T),
            over_segmentations(matrix, gt.areas(), T),
            under_segmentations(matrix, gt.areas(), T),
        )
        if base is None:
            base = counts
        else:
            assert counts == base
    # Permuting segment order changes nothing.
    perm_gt = segs([gt_rects[2], gt_rects[0], gt_rects[1]])
    perm_pred = segs([pred_rects[1], pred_rects[0]])
    matrix = correspondence(perm_gt, perm_pred)
    counts = (
        correct_detections(matrix, perm_gt.areas(), T),
        over_segmentations(matrix, perm_gt.areas(), T),
        under_segmentations(matrix, perm_gt.areas(), T),
    )
    assert counts == base


def test_left_out_measures_vanish_on_near_perfect_tilings():
    # The measures the report omits (partial / missed / false positive, in
    # their ratio-against-GT form) are all zero when every ground-truth
    # segment keeps a major-overlap partner, as with split-style predictions.
    rng = Rng(77)
    for _ in range(20):
        # Segments of at least 45px shifted by at most 1px keep every cell
        # ratio above (45-2)^2/45^2 > 0.9.
        gt = random_grid_doc(rng, 150, 150, 3, 3, table_id="gt", min_size=45)
        pred = perturbed_doc(rng, gt, max_shift=1, table_id="pred")
        for builder in (row_segments, column_segments, cell_segments):
            g, p = builder(gt), builder(pred)
            matrix = correspondence(g, p)
            ratios = matrix / g.areas()[:, None]
            majors = ratios > 1 - T
            partials = (ratios > T) & (ratios < 1 - T)
            missed = (~(ratios > T)).all(axis=1) & ~majors.any(axis=1)
            false_pos = (~(ratios > T)).all(axis=0)
            partial_bars = (partials.sum(axis=1) == 1) & ~majors.any(axis=1)
            assert not missed.any()
            assert not false_pos.any()
            assert not partial_bars.any()


def test_rectangle_evaluator_equals_pixel_oracle():
    rng = Rng(500)
    for trial in range(60):
        width = 40 + rng.below(120)
        height = 40 + rng.below(120)
        n_cols = 2 + rng.below(4)
        n_rows = 2 + rng.below(4)
        gt = random_grid_doc(rng, width, height, n_cols, n_rows, span_attempts=rng.below(3))
        if rng.below(2) == 0:
            pred = perturbed_doc(rng, gt, max_shift=1 + rng.below(6))
        else:
            pred = random_grid_doc(
                rng, width, height, 2 + rng.below(4), 2 + rng.below(4), table_id="pred"
            )
        report = evaluate(gt, pred, T)
        for builder, kind in ((row_segments, "row"), (column_segments, "column"), (cell_segments, "cell")):
            expected = oracle_counts(builder(gt), builder(pred), T)
            got = report.kind(kind)
            assert (got.correct, got.over_seg, got.under_seg) == expected, (trial, kind)


def test_segment_set_rejects_out_of_canvas():
    with pytest.raises(ValueError):
        segs([(0, 0, 120, 10)])
    with pytest.raises(ValueError):
        segs([(5, 5, 5, 10)])


def test_cell_segments_use_structure_not_content_bbox():
    doc = make_table(Rng(2), n_rows=3, n_cols=3)
    rects = cell_segments(doc).rects
    for cell, rect in zip(doc.cells, rects):
        assert rect == (
            doc.columns[cell.start_col].x1,
            doc.rows[cell.start_row].y1,
            doc.columns[cell.end_col].x2,
            doc.rows[cell.end_row].y2,
        )


def test_full_report_round_trips_to_json():
    doc = make_table(Rng(3), n_rows=4, n_cols=4)
    report = evaluate(doc, doc)
    obj = report.to_json()
    assert set(obj) == {"row", "column", "cell"}
    assert obj["cell"]["correctPct"] == 100.0
    merged = SegmentationReport.merged([report, report])
    assert merged.cell.gt_count == 2 * report.cell.gt_count


def test_correct_plus_over_never_exceeds_gt_count():
    # On tiling (document-derived) segment sets a segment with a major
    # partner can have no partial partners, so the two counts never overlap.
    rng = Rng(941)
    for _ in range(100):
        width = 40 + rng.below(120)
        height = 40 + rng.below(120)
        gt = random_grid_doc(rng, width, height, 2 + rng.below(4), 2 + rng.below(4))
        if rng.below(2) == 0:
            pred = perturbed_doc(rng, gt, max_shift=1 + rng.below(6))
        else:
            pred = random_grid_doc(
                rng, width, height, 2 + rng.below(4), 2 + rng.below(4), table_id="pred"
            )
        report = evaluate(gt, pred)
        for kind in ("row", "column", "cell"):
            k = report.kind(kind)
            assert k.correct + k.over_seg <= k.gt_count
