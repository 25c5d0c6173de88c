from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from src.domain.types import BBox, Detection, TrackStatus
from src.tracker.kalman import KalmanState


@dataclass
class Track:
    id: int
    class_id: int
    state: KalmanState
    status: TrackStatus
    last_observation: Detection
    age: int = 1
    hits: int = 1  # 連続でマッチしたフレーム数 (生成時を含む)
    time_since_update: int = 0
    history: list[tuple[int, BBox, float]] = field(default_factory=list)
    embedding: NDArray[np.float64] | None = None
    # 最後に観測で更新した直後の状態 (ORU の巻き戻し用)
    observed_state: KalmanState | None = None
    # フレーム -> 観測ボックス (OCM の速度方向用)
    observations: dict[int, BBox] = field(default_factory=dict)

    @property
    def box(self) -> BBox:
        return self.state.to_bbox()

    def update_embedding(self, emb: NDArray[np.float64] | None, momentum: float) -> None:
        if emb is None:
            return
        if self.embedding is None:
            self.embedding = emb.copy()
            return
        mixed = momentum * self.embedding + (1.0 - momentum) * emb
        self.embedding = mixed / np.linalg.norm(mixed)

    def direction(self, delta: int) -> NDArray[np.float64] | None:
        """delta フレーム前 (なければ最も古い) の観測から最後の観測への単位方向"""
        if len(self.observations) < 2:
            return None
        last_frame = self.last_observation.frame
        frames = sorted(f for f in self.observations if f < last_frame)
        candidates = [f for f in frames if f >= last_frame - delta] or frames
        prev = self.observations[candidates[0]]
        last = self.observations[last_frame]
        v = np.array([last.cx - prev.cx, last.cy - prev.cy])
        norm = float(np.linalg.norm(v))
        if norm < 1e-9:
            return None
        return v / norm


@dataclass(frozen=True)
class TrackSnapshot:
    frame: int
    id: int
    class_id: int
    box: BBox
    score: float
