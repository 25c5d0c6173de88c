# tests/test_tracker.py
from __future__ import annotations

import numpy as np
import pytest

from src.domain.config import KalmanParams, TrackerConfig
from src.domain.errors import ContractViolation, NumericalError
from src.domain.types import AnnotationRecord, BBox, Detection, TrackStatus, TrackTable
from src.metrics.clear import mota
from src.metrics.identity import idf1
from src.tracker.association import _ocm_cost, associate_two_stage
from src.tracker.engine import TrackerEngine, oru_reupdate, run_tracker, virtual_boxes
from src.tracker.geometry import cosine_distance, iou, iou_matrix
from src.tracker.interpolation import linear_interpolation
from src.tracker.kalman import KalmanState, kf_init, kf_predict, kf_update
from src.tracker.track import Track


def det(frame: int, box: BBox, score: float = 0.9, class_id: int = 1) -> Detection:
    return Detection(frame, class_id, box, score)


def make_track(
    box: BBox, status: TrackStatus, *, tid: int = 1, class_id: int = 1, frame: int = 1
) -> Track:
    state = kf_init(box)
    return Track(
        id=tid,
        class_id=class_id,
        state=state,
        status=status,
        last_observation=det(frame, box, class_id=class_id),
        observed_state=state,
        observations={frame: box},
    )


# ---------- geometry ----------


def test_iou_hand_example_and_symmetry():
    a, b = BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)
    assert iou(a, b) == pytest.approx(1 / 3)
    assert iou(b, a) == pytest.approx(iou(a, b))
    assert iou(a, a) == pytest.approx(1.0)
    assert iou(a, BBox(20, 20, 5, 5)) == 0.0


def test_iou_scale_invariant_and_matrix_consistent():
    a, b = BBox(1, 2, 10, 7), BBox(4, 3, 8, 9)
    scaled = iou(BBox(3, 6, 30, 21), BBox(12, 9, 24, 27))
    assert scaled == pytest.approx(iou(a, b))
    m = iou_matrix([a, b], [b])
    assert m.shape == (2, 1)
    assert m[0, 0] == pytest.approx(iou(a, b))
    assert iou_matrix([], [a]).shape == (0, 1)


def test_cosine_distance_range():
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert cosine_distance(e1, e1) == pytest.approx(0.0)
    assert cosine_distance(e1, e2) == pytest.approx(1.0)
    assert cosine_distance(e1, -e1) == pytest.approx(2.0)
    with pytest.raises(ContractViolation):
        cosine_distance(np.array([2.0, 0.0]), e1)


# ---------- kalman ----------


def test_kf_init_state():
    s = kf_init(BBox(0, 0, 10, 10))
    np.testing.assert_allclose(s.mean, [5, 5, 1, 10, 0, 0, 0, 0])
    assert np.all(np.diag(s.covariance) > 0)


def test_kf_predict_moves_by_velocity():
    s = kf_init(BBox(0, 0, 10, 10))
    mean = s.mean.copy()
    mean[4] = 2.0
    out = kf_predict(KalmanState(mean, s.covariance))
    assert out.mean[0] == pytest.approx(7.0)
    assert out.mean[1] == pytest.approx(5.0)


def test_kf_predict_stops_shrinking_at_zero_height():
    s = kf_init(BBox(0, 0, 10, 2))
    mean = s.mean.copy()
    mean[7] = -3.0
    out = kf_predict(KalmanState(mean, s.covariance))
    assert out.mean[3] == pytest.approx(2.0)
    assert out.mean[7] == 0.0
    assert out.to_bbox().h > 0
    # 入力の状態は書き換えない
    assert mean[7] == -3.0


def test_shrinking_lost_track_does_not_crash():
    a = [det(f, BBox(100, 100, 30, 60 - 3.0 * (f - 1))) for f in range(1, 13)]
    b = [det(f, BBox(400, 100, 40, 80)) for f in range(1, 31)]
    table = run_tracker(a + b, TrackerConfig(max_age=30))
    by_id = {tid: [r.frame for r in rows] for tid, rows in table.by_id().items()}
    assert len(by_id) == 2
    frames = sorted(by_id.values(), key=len)
    assert max(frames[0]) == 12
    assert frames[1] == list(range(1, 31))


def test_kf_matches_dense_reference():
    params = KalmanParams()
    s = kf_init(BBox(3, 4, 12, 30), params)
    f = np.eye(8)
    for k in range(4):
        f[k, k + 4] = 1.0
    h = s.mean[3]
    q = np.diag(
        np.square(
            [h / 20, h / 20, 1e-2, h / 20, h / 160, h / 160, 1e-5, h / 160]
        )
    )
    pred = kf_predict(s, params)
    np.testing.assert_allclose(pred.mean, f @ s.mean)
    np.testing.assert_allclose(pred.covariance, f @ s.covariance @ f.T + q, rtol=1e-12)

    z_box = BBox(5, 3, 12, 31)
    hm = np.eye(4, 8)
    hp = pred.mean[3]
    r = np.diag(np.square([hp / 20, hp / 20, 1e-1, hp / 20]))
    p = pred.covariance
    s_mat = hm @ p @ hm.T + r
    gain = p @ hm.T @ np.linalg.inv(s_mat)
    mean = pred.mean + gain @ (z_box.to_xyah() - hm @ pred.mean)
    ikh = np.eye(8) - gain @ hm
    cov = ikh @ p @ ikh.T + gain @ r @ gain.T
    upd = kf_update(pred, z_box, params)
    np.testing.assert_allclose(upd.mean, mean, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(upd.covariance, cov, rtol=1e-8, atol=1e-12)


def test_kf_update_zero_innovation_keeps_mean():
    s = kf_predict(kf_init(BBox(0, 0, 10, 20)))
    out = kf_update(s, s.to_bbox())
    np.testing.assert_allclose(out.mean, s.mean, atol=1e-9)
    # 観測で不確かさは減る
    assert np.trace(out.covariance) < np.trace(s.covariance)


def test_kf_update_trusts_measurement_when_noise_vanishes():
    params = KalmanParams(measurement_scale=1e-6)
    s = kf_predict(kf_init(BBox(0, 0, 10, 20), params), params)
    z = BBox(3, -2, 11, 19)
    out = kf_update(s, z, params)
    np.testing.assert_allclose(out.mean[:4], z.to_xyah(), atol=1e-6)


def test_kf_covariance_stays_symmetric_psd():
    rng = np.random.default_rng(0)
    s = kf_init(BBox(100, 100, 20, 40))
    for t in range(1000):
        s = kf_predict(s)
        jitter = rng.normal(0.0, 1.0, size=2)
        s = kf_update(s, BBox(100 + 2 * t + jitter[0], 100 + jitter[1], 20, 40))
        assert np.array_equal(s.covariance, s.covariance.T)
    assert np.linalg.eigvalsh(s.covariance).min() >= -1e-9


def test_kf_update_singular_innovation_raises():
    s = kf_init(BBox(0, 0, 10, 10))
    broken = KalmanState(s.mean, -100.0 * np.eye(8))
    with pytest.raises(NumericalError):
        kf_update(broken, BBox(1, 1, 10, 10))


# ---------- association ----------


def test_stage1_matches_high_score_detection():
    tracks = [make_track(BBox(0, 0, 10, 10), TrackStatus.ACTIVE)]
    res = associate_two_stage(tracks, [det(2, BBox(1, 0, 10, 10))], TrackerConfig())
    assert res.matches == [(0, 0)]
    assert res.stage_of[(0, 0)] == 1
    assert res.unmatched_tracks == [] and res.unmatched_dets_high == []


def test_stage2_low_score_detection_recovers_active_track():
    tracks = [make_track(BBox(0, 0, 10, 10), TrackStatus.ACTIVE)]
    low = det(2, BBox(1, 0, 10, 10), score=0.3)
    res = associate_two_stage(tracks, [low], TrackerConfig())
    assert res.matches == [(0, 0)]
    assert res.stage_of[(0, 0)] == 2
    assert res.unmatched_dets_high == []


def test_lost_track_ignores_low_score_detection():
    tracks = [make_track(BBox(0, 0, 10, 10), TrackStatus.LOST)]
    res = associate_two_stage(tracks, [det(2, BBox(1, 0, 10, 10), score=0.3)], TrackerConfig())
    assert res.matches == []
    assert res.unmatched_tracks == [0]


def test_stage3_tentative_track():
    tracks = [make_track(BBox(0, 0, 10, 10), TrackStatus.TENTATIVE)]
    res = associate_two_stage(tracks, [det(2, BBox(0, 1, 10, 10))], TrackerConfig())
    assert res.stage_of[(0, 0)] == 3

def _moving_track(prev: BBox, last: BBox, tid: int) -> Track:
    t = make_track(last, TrackStatus.ACTIVE, tid=tid, frame=3)
    t.observations[1] = prev
    return t


def test_ocm_cost_hand_values():
    cfg = TrackerConfig(use_ocm=True, ocm_weight=0.2, ocm_delta=3)
    t = _moving_track(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10), tid=1)
    assert _ocm_cost(t, det(4, BBox(20, 0, 10, 10)), cfg) == pytest.approx(0.0)
    assert _ocm_cost(t, det(4, BBox(10, 10, 10, 10)), cfg) == pytest.approx(0.2)
    assert _ocm_cost(t, det(4, BBox(0, 0, 10, 10)), cfg) == pytest.approx(0.4)
    # 45° 方向: 0.2 (1 − cos 45°)
    assert _ocm_cost(t, det(4, BBox(13, 3, 10, 10)), cfg) == pytest.approx(
        0.2 * (1 - np.sqrt(0.5))
    )
    # 検出が動いていない / 観測が 1 つだけ なら 0
    assert _ocm_cost(t, det(4, BBox(10, 0, 10, 10)), cfg) == 0.0
    single = make_track(BBox(10, 0, 10, 10), TrackStatus.ACTIVE)
    assert _ocm_cost(single, det(4, BBox(0, 0, 10, 10)), cfg) == 0.0


def test_ocm_resolves_crossing_tracks():
    # 右へ進む A と左へ進む B がすれ違う瞬間。IoU だけだと入れ替わる
    a = _moving_track(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10), tid=1)
    b = _moving_track(BBox(20.5, 0, 10, 10), BBox(10.5, 0, 10, 10), tid=2)
    dets = [det(4, BBox(12, 0, 10, 10)), det(4, BBox(8, 0, 10, 10))]

    plain = associate_two_stage([a, b], dets, TrackerConfig(use_ocm=False))
    assert sorted(plain.matches) == [(0, 1), (1, 0)]

    with_ocm = associate_two_stage([a, b], dets, TrackerConfig(use_ocm=True))
    assert sorted(with_ocm.matches) == [(0, 0), (1, 1)]



def test_class_mismatch_and_gate_are_forbidden():
    tracks = [make_track(BBox(0, 0, 10, 10), TrackStatus.ACTIVE)]
    other_class = det(2, BBox(0, 0, 10, 10), class_id=2)
    far = det(2, BBox(9, 0, 10, 10))
    res = associate_two_stage(tracks, [other_class, far], TrackerConfig())
    assert res.matches == []
    assert res.unmatched_dets_high == [0, 1]


def test_association_without_detections():
    tracks = [make_track(BBox(0, 0, 10, 10), TrackStatus.ACTIVE)]
    res = associate_two_stage(tracks, [], TrackerConfig())
    assert res.matches == [] and res.unmatched_tracks == [0]


def test_association_rejects_mixed_frames():
    with pytest.raises(ContractViolation):
        associate_two_stage([], [det(1, BBox(0, 0, 5, 5)), det(2, BBox(0, 0, 5, 5))], TrackerConfig())


# ---------- ORU ----------


def test_virtual_boxes_are_linear_in_center():
    boxes = virtual_boxes(BBox(0, 0, 10, 10), BBox(6, 0, 10, 10), 3)
    assert [b.cx for b in boxes] == pytest.approx([7.0, 9.0])
    assert all(b.w == pytest.approx(10.0) for b in boxes)


def test_oru_disabled_equals_plain_update():
    cfg = TrackerConfig(use_oru=False)
    track = make_track(BBox(0, 0, 10, 10), TrackStatus.LOST)
    for _ in range(3):
        track.state = kf_predict(track.state)
    expected = kf_update(track.state, BBox(6, 0, 10, 10))
    oru_reupdate(track, det(4, BBox(6, 0, 10, 10)), cfg)
    np.testing.assert_allclose(track.state.mean, expected.mean)
    assert track.status is TrackStatus.ACTIVE


def test_oru_requires_gap():
    track = make_track(BBox(0, 0, 10, 10), TrackStatus.LOST, frame=5)
    with pytest.raises(ContractViolation):
        oru_reupdate(track, det(6, BBox(1, 0, 10, 10)), TrackerConfig())


def test_oru_recovery_keeps_velocity():
    engine = TrackerEngine(TrackerConfig())
    for f in range(1, 21):
        engine.step(f, [det(f, BBox(2.0 * f, 0, 20, 40))])
    engine.step(21, [])
    assert engine.tracks[0].status is TrackStatus.LOST
    out = engine.step(22, [det(22, BBox(44.0, 0, 20, 40))])
    assert [s.id for s in out] == [1]
    assert engine.tracks[0].state.velocity[0] == pytest.approx(2.0, rel=0.05)


# ---------- engine ----------


def test_empty_first_frame():
    engine = TrackerEngine(TrackerConfig())
    assert engine.step(1, []) == []
    assert engine.tracks == []


def test_single_object_constant_velocity():
    dets = [det(f, BBox(10 + 2.0 * f, 50, 40, 80)) for f in range(1, 11)]
    table = run_tracker(dets, TrackerConfig())
    assert table.ids() == [1]
    assert table.frames() == list(range(1, 11))
    for r in table:
        if r.frame >= 5:
            assert abs(r.box.x - (10 + 2.0 * r.frame)) < 1.0


def test_dropped_frames_keep_identity():
    dets = [det(f, BBox(10 + 2.0 * f, 50, 40, 80)) for f in range(1, 11) if f not in (4, 5)]
    table = run_tracker(dets, TrackerConfig())
    assert table.ids() == [1]
    # ロスト中のフレームは出力しない
    assert table.frames() == [1, 2, 3, 6, 7, 8, 9, 10]


def test_late_birth_waits_for_min_hits():
    engine = TrackerEngine(TrackerConfig(min_hits=3))
    a = BBox(0, 0, 40, 80)
    b = BBox(500, 0, 40, 80)
    emitted: dict[int, list[int]] = {}
    for f in range(1, 8):
        dets = [det(f, a)] + ([det(f, b)] if f >= 3 else [])
        for snap in engine.step(f, dets):
            emitted.setdefault(snap.id, []).append(f)
    assert emitted[1] == list(range(1, 8))
    assert emitted[2] == [5, 6, 7]


def test_frames_must_increase():
    engine = TrackerEngine(TrackerConfig())
    engine.step(3, [])
    with pytest.raises(ContractViolation):
        engine.step(3, [])
    with pytest.raises(ContractViolation):
        engine.step(4, [det(5, BBox(0, 0, 5, 5))])


def test_ids_never_reused():
    dets = [det(f, BBox(0, 0, 40, 80)) for f in (1, 40, 41)]
    table = run_tracker(dets, TrackerConfig(max_age=5, min_hits=1))
    assert table.ids() == [1, 2]


def test_tracker_is_deterministic(cv_scene):
    scene = cv_scene(4, 60, 0.2, 3)
    a = run_tracker(scene.detections, TrackerConfig())
    b = run_tracker(scene.detections, TrackerConfig())
    assert a.records == b.records


def test_noiseless_scene_is_tracked_perfectly(cv_scene):
    scene = cv_scene(5, 100, 0.0, 1)
    table = run_tracker(scene.detections, TrackerConfig())
    assert mota(scene.gt, table)[0] == pytest.approx(1.0)
    assert idf1(scene.gt, table)[0] == pytest.approx(1.0)


def test_scene_with_dropout_end_to_end(cv_scene):
    cfg = TrackerConfig()
    scene = cv_scene(5, 100, 0.1, 0)
    table = linear_interpolation(run_tracker(scene.detections, cfg), cfg.max_gap)
    assert mota(scene.gt, table)[0] >= 0.95
    assert idf1(scene.gt, table)[0] >= 0.95


# ---------- interpolation ----------


def _two_point_table(gap: int) -> TrackTable:
    return TrackTable(
        [
            AnnotationRecord(1, 1, BBox(0, 0, 10, 10), 1.0, 1),
            AnnotationRecord(1 + gap, 1, BBox(2.0 * gap, 0, 10, 10), 0.5, 1),
        ]
    )


def test_interpolation_fills_midpoint():
    out = linear_interpolation(_two_point_table(2))
    mid = out.by_frame()[2][0]
    assert mid.id == 1 and mid.class_id == 1
    assert mid.box.x == pytest.approx(2.0)
    assert mid.conf == pytest.approx(0.75)


def test_interpolation_respects_max_gap():
    assert len(linear_interpolation(_two_point_table(25), max_gap=20)) == 2
    out = linear_interpolation(_two_point_table(20), max_gap=20)
    assert len(out) == 21
    xs = [r.box.x for r in out]
    np.testing.assert_allclose(xs, 2.0 * np.arange(21))


def test_interpolation_rejects_negative_gap():
    with pytest.raises(ContractViolation):
        linear_interpolation(TrackTable(), max_gap=-1)


def test_appearance_only_association():
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    tracks = [
        make_track(BBox(0, 0, 10, 10), TrackStatus.ACTIVE, tid=1),
        make_track(BBox(2, 0, 10, 10), TrackStatus.ACTIVE, tid=2),
    ]
    tracks[0].embedding, tracks[1].embedding = e1, e2
    d = Detection(2, 1, BBox(1, 0, 10, 10), 0.9, e2)
    assert associate_two_stage(tracks, [d], TrackerConfig()).matches == [(0, 0)]
    by_look = associate_two_stage(tracks, [d], TrackerConfig(appearance_weight=1.0))
    assert by_look.matches == [(1, 0)]
