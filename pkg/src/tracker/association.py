"""ByteTrack 型の二段階アソシエーション

stage 1: tentative 以外の追跡中・ロスト中トラック × 高スコア検出 (IoU + 任意で見た目・OCM)
stage 2: stage 1 で残った追跡中トラック × 低スコア検出 (IoU のみ)
stage 3: tentative トラック × 残りの高スコア検出 (IoU のみ)
クラスが異なるペア、IoU がゲート未満のペアは常に禁止。
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from src.domain.config import TrackerConfig
from src.domain.errors import ContractViolation
from src.domain.types import Detection, TrackStatus
from src.optimizer.assignment import hungarian
from src.tracker.geometry import cosine_distance, iou_matrix
from src.tracker.track import Track

FORBIDDEN = float("inf")


@dataclass
class AssociationResult:
    matches: list[tuple[int, int]] = field(default_factory=list)  # (track idx, det idx)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_dets_high: list[int] = field(default_factory=list)
    stage_of: dict[tuple[int, int], int] = field(default_factory=dict)


def _ocm_cost(track: Track, det: Detection, cfg: TrackerConfig) -> float:
    direction = track.direction(cfg.ocm_delta)
    if direction is None:
        return 0.0
    last = track.last_observation.box
    v = np.array([det.box.cx - last.cx, det.box.cy - last.cy])
    norm = float(np.linalg.norm(v))
    if norm < 1e-9:
        return 0.0
    cos_theta = float(np.dot(direction, v / norm))
    return cfg.ocm_weight * (1.0 - cos_theta)


def _cost_matrix(
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    cfg: TrackerConfig,
    *,
    gate: float,
    use_appearance: bool,
    use_ocm: bool,
) -> NDArray[np.float64]:
    ious = iou_matrix([t.box for t in tracks], [d.box for d in dets])
    cost = np.full(ious.shape, FORBIDDEN)
    aw = cfg.appearance_weight if use_appearance else 0.0
    for i, t in enumerate(tracks):
        for j, d in enumerate(dets):
            if t.class_id != d.class_id or ious[i, j] < gate:
                continue
            if aw > 0 and t.embedding is not None and d.embedding is not None:
                c = (1.0 - aw) * (1.0 - ious[i, j]) + aw * cosine_distance(t.embedding, d.embedding)
            else:
                c = 1.0 - ious[i, j]
            if use_ocm:
                c += _ocm_cost(t, d, cfg)
            cost[i, j] = c
    return cost


def _match(
    track_idx: list[int],
    det_idx: list[int],
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    cfg: TrackerConfig,
    *,
    gate: float,
    use_appearance: bool,
    use_ocm: bool,
) -> list[tuple[int, int]]:
    if not track_idx or not det_idx:
        return []
    cost = _cost_matrix(
        [tracks[i] for i in track_idx],
        [dets[j] for j in det_idx],
        cfg,
        gate=gate,
        use_appearance=use_appearance,
        use_ocm=use_ocm,
    )
    res = hungarian(cost)
    return [(track_idx[r], det_idx[c]) for r, c in res.pairs]


def associate_two_stage(
    tracks: Sequence[Track], detections: Sequence[Detection], cfg: TrackerConfig
) -> AssociationResult:
    frames = {d.frame for d in detections}
    if len(frames) > 1:
        raise ContractViolation(f"1 フレーム分の検出のみ受け付けます: frames={sorted(frames)}")

    high = [j for j, d in enumerate(detections) if d.score >= cfg.tau_high]
    low = [j for j, d in enumerate(detections) if cfg.tau_low <= d.score < cfg.tau_high]
    confirmed = [
        i for i, t in enumerate(tracks) if t.status in (TrackStatus.ACTIVE, TrackStatus.LOST)
    ]
    tentative = [i for i, t in enumerate(tracks) if t.status is TrackStatus.TENTATIVE]
    result = AssociationResult()

    stage1 = _match(
        confirmed,
        high,
        tracks,
        detections,
        cfg,
        gate=cfg.iou_gate,
        use_appearance=True,
        use_ocm=cfg.use_ocm,
    )
    for m in stage1:
        result.stage_of[m] = 1
    used_t = {i for i, _ in stage1}
    used_d = {j for _, j in stage1}

    # ロスト中のトラックは低スコア検出とは組ませない
    remaining_active = [
        i for i in confirmed if i not in used_t and tracks[i].status is TrackStatus.ACTIVE
    ]
    stage2 = _match(
        remaining_active,
        low,
        tracks,
        detections,
        cfg,
        gate=cfg.iou_gate_low,
        use_appearance=False,
        use_ocm=False,
    )
    for m in stage2:
        result.stage_of[m] = 2
    used_t |= {i for i, _ in stage2}

    remaining_high = [j for j in high if j not in used_d]
    stage3 = _match(
        tentative,
        remaining_high,
        tracks,
        detections,
        cfg,
        gate=cfg.iou_gate,
        use_appearance=True,
        use_ocm=False,
    )
    for m in stage3:
        result.stage_of[m] = 3
    used_t |= {i for i, _ in stage3}
    used_d |= {j for _, j in stage3}

    result.matches = sorted(stage1 + stage2 + stage3)
    result.unmatched_tracks = [i for i in range(len(tracks)) if i not in used_t]
    result.unmatched_dets_high = [j for j in high if j not in used_d]
    return result
