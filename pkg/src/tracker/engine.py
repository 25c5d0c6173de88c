"""tracking-by-detection エンジン

フレームごとに 予測 → 二段階アソシエーション → 更新 (ロスト復帰時は ORU) →
新規トラック生成 → ライフサイクル管理 を行い、そのフレームで観測更新された
active トラックを返す。
"""

from __future__ import annotations

import logging
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.domain.config import KalmanParams, TrackerConfig
from src.domain.errors import ContractViolation
from src.domain.types import AnnotationRecord, BBox, Detection, TrackStatus, TrackTable
from src.tracker.association import associate_two_stage
from src.tracker.kalman import kf_init, kf_predict, kf_update
from src.tracker.track import Track, TrackSnapshot

logger = logging.getLogger(__name__)


def virtual_boxes(last: BBox, new: BBox, gap: int) -> list[BBox]:
    """last と new の間を (cx, cy, a, h) で線形補間した gap−1 個の仮想観測"""
    a = last.to_xyah()
    b = new.to_xyah()
    return [BBox.from_xyah(a + (b - a) * k / gap) for k in range(1, gap)]


def oru_reupdate(
    track: Track,
    new_obs: Detection,
    cfg: TrackerConfig,
    params: KalmanParams | None = None,
) -> Track:
    """ロスト中トラックの復帰時、最後の観測状態から仮想観測で再更新してから new_obs で更新する。

    track.state は new_obs のフレームまで予測済みであること。
    cfg.use_oru が False のときは予測済み状態に対する通常の kf_update と同じ。
    """
    params = params or cfg.kalman()
    if not cfg.use_oru:
        track.state = kf_update(track.state, new_obs.box, params)
        track.status = TrackStatus.ACTIVE
        return track
    if track.status is not TrackStatus.LOST:
        raise ContractViolation(
            f"ORU はロスト中のトラックのみ: id={track.id}, status={track.status}"
        )
    gap = new_obs.frame - track.last_observation.frame
    if gap < 2:
        raise ContractViolation(f"ORU には 2 フレーム以上のギャップが必要です: gap={gap}")

    state = track.observed_state or track.state
    for vb in virtual_boxes(track.last_observation.box, new_obs.box, gap):
        state = kf_update(kf_predict(state, params), vb, params)
    track.state = kf_update(kf_predict(state, params), new_obs.box, params)
    track.status = TrackStatus.ACTIVE
    return track


@dataclass
class TrackerEngine:
    cfg: TrackerConfig
    tracks: list[Track] = field(default_factory=list)
    next_id: int = 1
    last_frame: int | None = None
    frame_times: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.params = self.cfg.kalman()

    def _new_track(self, det: Detection, first_frame: bool) -> Track:
        state = kf_init(det.box, self.params)
        track = Track(
            id=self.next_id,
            class_id=det.class_id,
            state=state,
            status=TrackStatus.ACTIVE if first_frame else TrackStatus.TENTATIVE,
            last_observation=det,
            history=[(det.frame, det.box, det.score)],
            observed_state=state,
            observations={det.frame: det.box},
        )
        track.update_embedding(det.embedding, self.cfg.ema_momentum)
        self.next_id += 1
        return track

    def _apply_match(self, track: Track, det: Detection) -> None:
        recovering = track.status is TrackStatus.LOST
        gap = det.frame - track.last_observation.frame
        if recovering and self.cfg.use_oru and gap >= 2:
            oru_reupdate(track, det, self.cfg, self.params)
        else:
            track.state = kf_update(track.state, det.box, self.params)
        if recovering:
            track.status = TrackStatus.ACTIVE
            track.hits = 1
        else:
            track.hits += 1
        if track.status is TrackStatus.TENTATIVE and track.hits >= self.cfg.min_hits:
            track.status = TrackStatus.ACTIVE
        track.time_since_update = 0
        track.last_observation = det
        track.observed_state = track.state
        track.observations[det.frame] = det.box
        track.history.append((det.frame, track.box, det.score))
        track.update_embedding(det.embedding, self.cfg.ema_momentum)

    def step(self, frame: int, detections: Sequence[Detection]) -> list[TrackSnapshot]:
        if self.last_frame is not None and frame <= self.last_frame:
            raise ContractViolation(f"フレームは昇順で与えてください: {self.last_frame} -> {frame}")
        bad = [d.frame for d in detections if d.frame != frame]
        if bad:
            raise ContractViolation(
                f"フレーム {frame} に別フレームの検出が混在: {sorted(set(bad))}"
            )
        start = time.perf_counter()
        first_frame = self.last_frame is None
        n_predict = 0 if self.last_frame is None else frame - self.last_frame
        self.last_frame = frame

        for t in self.tracks:
            for _ in range(n_predict):
                t.state = kf_predict(t.state, self.params)
            t.age += 1
            t.time_since_update = frame - t.last_observation.frame

        assoc = associate_two_stage(self.tracks, detections, self.cfg)
        for ti, di in assoc.matches:
            self._apply_match(self.tracks[ti], detections[di])

        for ti in assoc.unmatched_tracks:
            t = self.tracks[ti]
            if t.status is TrackStatus.TENTATIVE:
                t.status = TrackStatus.REMOVED
            elif t.status is TrackStatus.ACTIVE:
                t.status = TrackStatus.LOST
            if t.status is TrackStatus.LOST and t.time_since_update > self.cfg.max_age:
                t.status = TrackStatus.REMOVED

        born = [self._new_track(detections[j], first_frame) for j in assoc.unmatched_dets_high]
        self.tracks = [t for t in self.tracks if t.status is not TrackStatus.REMOVED] + born

        out = [
            TrackSnapshot(frame, t.id, t.class_id, t.box, t.last_observation.score)
            for t in self.tracks
            if t.status is TrackStatus.ACTIVE and t.last_observation.frame == frame
        ]
        elapsed = time.perf_counter() - start
        self.frame_times.append(elapsed)
        logger.debug(
            "frame %d: dets=%d tracks=%d out=%d (%.2f ms)",
            frame,
            len(detections),
            len(self.tracks),
            len(out),
            elapsed * 1e3,
        )
        return sorted(out, key=lambda s: s.id)


def run_tracker(
    detections: Iterable[Detection], cfg: TrackerConfig, frames: Sequence[int] | None = None
) -> TrackTable:
    """検出列全体を追跡して結果テーブルを返す。frames を省略すると 1..最終フレーム"""
    by_frame: dict[int, list[Detection]] = {}
    for d in detections:
        by_frame.setdefault(d.frame, []).append(d)
    if frames is None:
        last = max(by_frame, default=0)
        frames = range(1, last + 1)
    engine = TrackerEngine(cfg)
    records: list[AnnotationRecord] = []
    for f in frames:
        for snap in engine.step(f, by_frame.get(f, [])):
            records.append(
                AnnotationRecord(
                    frame=snap.frame,
                    id=snap.id,
                    box=snap.box,
                    conf=snap.score,
                    class_id=snap.class_id,
                )
            )
    if engine.frame_times:
        total = float(np.sum(engine.frame_times))
        logger.info(
            "tracked %d frames in %.3f s (%.2f ms/frame), %d ids",
            len(engine.frame_times),
            total,
            1e3 * total / len(engine.frame_times),
            engine.next_id - 1,
        )
    return TrackTable(records)

