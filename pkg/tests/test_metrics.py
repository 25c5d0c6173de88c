# tests/test_metrics.py
from __future__ import annotations

import math

import numpy as np
import pytest
from rich.console import Console

from src.domain.config import MetricsConfig
from src.domain.errors import MetricUndefinedError
from src.domain.types import AggregationMode, AnnotationRecord, BBox, TrackTable
from src.metrics.clear import mota
from src.metrics.combine import combine_classes, evaluate, merge_counts, per_class_counts
from src.metrics.hota import hota
from src.metrics.identity import idf1
from src.metrics.matching import match_frame
from src.metrics.report import alpha_frame, per_class_frame, print_eval_rich


def rec(frame: int, tid: int, x: float = 0.0, y: float = 0.0, cls: int = 1) -> AnnotationRecord:
    return AnnotationRecord(frame, tid, BBox(x, y, 10, 10), 1.0, cls)


def table(*rows: AnnotationRecord) -> TrackTable:
    return TrackTable(list(rows))


@pytest.fixture
def two_objects() -> TrackTable:
    return table(*(rec(f, tid, x=50.0 * tid + f) for f in range(1, 6) for tid in (1, 2)))


# ---------- frame matching ----------


def test_match_frame_gate():
    gts = [BBox(0, 0, 10, 10)]
    # IoU 0.4 のペア
    pred = [BBox(0, 0, 10, 4)]
    assert match_frame(gts, pred, 0.5) == []
    assert len(match_frame(gts, pred, 0.4)) == 1


def test_match_frame_prefers_cardinality():
    gts = [BBox(0, 0, 10, 10), BBox(6, 0, 10, 10)]
    preds = [BBox(3, 0, 10, 10)]
    pairs = match_frame(gts, preds, 0.3)
    assert len(pairs) == 1


# ---------- HOTA ----------


def test_perfect_tracking_scores_one(two_objects):
    s = hota(two_objects, two_objects)
    assert s.hota == pytest.approx(1.0)
    assert s.deta == pytest.approx(1.0)
    assert s.assa == pytest.approx(1.0)
    assert s.loca == pytest.approx(1.0)
    assert mota(two_objects, two_objects) == (pytest.approx(1.0), 0, 0, 0)
    assert idf1(two_objects, two_objects)[0] == pytest.approx(1.0)


def test_half_coverage_case():
    gt = table(rec(1, 1), rec(2, 1))
    pred = table(rec(1, 7))
    s = hota(gt, pred)
    np.testing.assert_allclose(s.deta_alpha, 0.5)
    np.testing.assert_allclose(s.assa_alpha, 0.5)
    np.testing.assert_allclose(s.hota_alpha, 0.5)
    assert s.hota == pytest.approx(0.5)
    score, idtp, idfp, idfn = idf1(gt, pred)
    assert (idtp, idfp, idfn) == (1, 0, 1)
    assert score == pytest.approx(2 / 3)


def test_mid_sequence_id_swap():
    gt = table(*(rec(f, 1) for f in range(1, 5)))
    pred = table(rec(1, 1), rec(2, 1), rec(3, 2), rec(4, 2))
    s = hota(gt, pred)
    assert s.deta == pytest.approx(1.0)
    assert s.assa == pytest.approx(0.5)
    assert s.hota == pytest.approx(math.sqrt(0.5))
    assert mota(gt, pred)[3] == 1


def test_hota_alpha_relation_and_monotonic():
    gt = table(*(rec(f, 1, x=0.0) for f in range(1, 6)))
    pred = table(*(rec(f, 1, x=0.5 * f) for f in range(1, 6)))
    s = hota(gt, pred, MetricsConfig())
    np.testing.assert_allclose(s.hota_alpha**2, s.deta_alpha * s.assa_alpha, atol=1e-12)
    assert np.all(np.diff(s.hota_alpha) <= 1e-12)
    assert len(s.alphas) == 19


def test_disjoint_boxes():
    gt = table(rec(1, 1, x=0.0), rec(2, 1, x=0.0))
    pred = table(rec(1, 1, x=100.0), rec(2, 1, x=100.0))
    assert hota(gt, pred).hota == 0.0
    assert hota(gt, pred).loca == 0.0
    assert idf1(gt, pred)[0] == 0.0


# ---------- CLEAR ----------


def test_mota_miss_and_switch():
    gt = table(rec(1, 1, x=0.0), rec(1, 2, x=100.0), rec(2, 1, x=0.0), rec(2, 2, x=100.0))
    pred = table(rec(1, 11, x=0.0), rec(1, 12, x=100.0), rec(2, 13, x=100.0))
    score, fp, fn, idsw = mota(gt, pred)
    assert (fp, fn, idsw) == (0, 1, 1)
    assert score == pytest.approx(0.5)


def test_mota_label_invariance(two_objects):
    renamed = TrackTable([rec(r.frame, r.id + 100, x=r.box.x) for r in two_objects])
    assert mota(two_objects, renamed)[0] == pytest.approx(1.0)
    assert idf1(two_objects, renamed)[0] == pytest.approx(1.0)


def test_mota_can_be_negative():
    gt = table(rec(1, 1))
    flood = table(*(rec(1, k, x=30.0 * k) for k in range(1, 6)))
    score, fp, _, _ = mota(gt, flood)
    assert fp == 5
    assert score < 0


def test_mota_undefined_without_gt():
    assert math.isnan(mota(table(), table(rec(1, 1)))[0])


# ---------- aggregation ----------


def test_class_avg_vs_det_avg():
    gt = table(*(rec(f, 1, cls=1) for f in (1, 2)), *(rec(f, 2, x=100.0, cls=2) for f in (1, 2)))
    # class 2 は予測が全部ずれている
    pred = table(
        *(rec(f, 1, cls=1) for f in (1, 2)), *(rec(f, 2, x=300.0, cls=2) for f in (1, 2))
    )
    counts = per_class_counts(gt, pred)
    class_avg = combine_classes(counts, AggregationMode.CLASS_AVG)
    det_avg = combine_classes(counts, AggregationMode.DET_AVG)
    assert class_avg.deta == pytest.approx(0.5)
    assert det_avg.deta == pytest.approx(2 / 6)
    assert class_avg.per_class[1].hota.deta == pytest.approx(1.0)
    assert class_avg.per_class[2].hota.deta == pytest.approx(0.0)


def test_single_class_modes_agree(two_objects):
    pred = TrackTable([r for r in two_objects if r.frame != 3])
    a = evaluate(two_objects, pred, mode="det_avg")
    b = evaluate(two_objects, pred, mode="class_avg")
    assert a.headline() == pytest.approx(b.headline())


def test_class_absent_from_gt_is_excluded(two_objects):
    pred = TrackTable([*two_objects.records, rec(1, 99, x=500.0, cls=4)])
    res = evaluate(two_objects, pred)
    assert list(res.per_class) == [1]
    assert res.fp == 0
    assert any("class 4" in w for w in res.warnings)


def test_empty_gt_and_prediction():
    res = evaluate(table(), table())
    assert res.hota == pytest.approx(1.0)
    assert "empty" in res.flags and "mota_undefined" in res.flags


def test_empty_gt_with_predictions():
    res = evaluate(table(), table(rec(1, 1)))
    assert res.hota == 0.0
    assert res.flags == ["mota_undefined"]
    with pytest.raises(MetricUndefinedError):
        combine_classes({}, "det_avg")


def test_merge_counts_equals_joint_evaluation(two_objects):
    first = TrackTable([r for r in two_objects if r.frame <= 2])
    second = TrackTable([rec(r.frame, r.id + 10, x=r.box.x) for r in two_objects if r.frame > 2])
    merged = merge_counts(
        [per_class_counts(first, first), per_class_counts(second, second)]
    )
    res = combine_classes(merged, "det_avg")
    assert res.hota == pytest.approx(1.0)
    assert res.counts[1].n_gt == len(two_objects)


def test_lp_backend_matches_hungarian(two_objects):
    pred = TrackTable(
        [rec(r.frame, r.id if r.frame < 3 else 3 - r.id, x=r.box.x) for r in two_objects]
    )
    a = evaluate(two_objects, pred, MetricsConfig(assignment_backend="hungarian"))
    b = evaluate(two_objects, pred, MetricsConfig(assignment_backend="lp"))
    assert a.idf1 == pytest.approx(b.idf1)
    assert a.idtp == b.idtp


def test_visibility_threshold_filters_gt():
    gt = TrackTable(
        [
            AnnotationRecord(1, 1, BBox(0, 0, 10, 10), 1.0, 1, 1.0),
            AnnotationRecord(1, 2, BBox(50, 0, 10, 10), 1.0, 1, 0.1),
        ]
    )
    pred = table(rec(1, 1))
    res = evaluate(gt, pred, MetricsConfig(gt_visibility_threshold=0.5))
    assert res.fn == 0


# ---------- reports ----------


def test_to_dict_and_frames(two_objects):
    res = evaluate(two_objects, two_objects)
    d = res.to_dict()
    assert d["det_avg.HOTA"] == pytest.approx(1.0)
    assert "det_avg.HOTA@0.50" in d
    assert "det_avg.person.IDF1" in d
    df = per_class_frame(res)
    assert list(df["class_id"]) == [1]
    assert len(alpha_frame(res)) == 19


def test_print_eval_rich(two_objects):
    console = Console(record=True, width=160)
    res = evaluate(two_objects, table(*(r for r in two_objects if r.id == 1)))
    print_eval_rich([res], console)
    text = console.export_text()
    assert "Tracking Metrics" in text
    assert "Per Class" in text
    assert "det_avg" in text
