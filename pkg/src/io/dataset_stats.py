"""データセット統計

- 隣接フレーム間 IoU の分布 (同一 id が連続フレームに現れるペア)
- 見た目特徴のコサイン距離分布 (同一 id の連続出現 / 同一フレームに共存する別 id)
- クラスごとのインスタンス数・トラック数
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from src.domain.types import TrackTable
from src.metrics.combine import class_name
from src.tracker.geometry import cosine_distance, iou

logger = logging.getLogger(__name__)

IOU_BINS = 20
COSINE_BINS = 40


@dataclass
class Distribution:
    values: NDArray[np.float64]
    counts: NDArray[np.int64]
    edges: NDArray[np.float64]

    @classmethod
    def of(cls, values: list[float], bins: int, lo: float, hi: float) -> Distribution:
        v = np.asarray(values, dtype=np.float64)
        counts, edges = np.histogram(np.clip(v, lo, hi), bins=bins, range=(lo, hi))
        return cls(v, counts.astype(np.int64), edges)

    @property
    def empty(self) -> bool:
        return self.values.size == 0

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(self.values.mean()) if self.n else float("nan")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lo": self.edges[:-1], "hi": self.edges[1:], "count": self.counts})

    def summary(self, prefix: str) -> dict[str, float | int | bool]:
        return {f"{prefix}.n": self.n, f"{prefix}.mean": self.mean, f"{prefix}.empty": self.empty}


def stats_adjacent_iou(gt: TrackTable) -> Distribution:
    values: list[float] = []
    for tid, rows in sorted(gt.by_id().items()):
        if tid < 0:
            continue
        for a, b in itertools.pairwise(rows):
            if b.frame == a.frame + 1:
                values.append(iou(a.box, b.box))
    if not values:
        logger.warning("隣接フレームに同じ id が現れるペアがありません")
    return Distribution.of(values, IOU_BINS, 0.0, 1.0)


@dataclass
class CosineStats:
    same_id: Distribution
    cross_id: Distribution
    missing: list[tuple[int, int]]


def stats_appearance_cosine(
    gt: TrackTable, embeddings: Mapping[tuple[int, int], NDArray[np.float64]]
) -> CosineStats:
    missing = sorted({(r.frame, r.id) for r in gt if (r.frame, r.id) not in embeddings})
    if missing:
        logger.warning(
            "見た目特徴がない (frame, id) を %d 件スキップします: %s", len(missing), missing[:10]
        )
    have = set(embeddings)

    same: list[float] = []
    for tid, rows in sorted(gt.by_id().items()):
        # 隣接フレームのペアだけ。特徴が欠けたフレームをまたいでつながない
        for a, b in itertools.pairwise(rows):
            ka, kb = (a.frame, tid), (b.frame, tid)
            if b.frame == a.frame + 1 and ka in have and kb in have:
                same.append(cosine_distance(embeddings[ka], embeddings[kb]))

    cross: list[float] = []
    for frame, rows in sorted(gt.by_frame().items()):
        keys = sorted((frame, r.id) for r in rows if (frame, r.id) in have)
        for a, b in itertools.combinations(keys, 2):
            cross.append(cosine_distance(embeddings[a], embeddings[b]))

    return CosineStats(
        same_id=Distribution.of(same, COSINE_BINS, 0.0, 2.0),
        cross_id=Distribution.of(cross, COSINE_BINS, 0.0, 2.0),
        missing=missing,
    )


def stats_category_counts(gt: TrackTable) -> pd.DataFrame:
    rows = []
    for c in gt.class_ids():
        sub = gt.filter_class(c)
        rows.append(
            {
                "class_id": c,
                "class": class_name(c),
                "instances": len(sub),
                "tracks": len(sub.ids()),
            }
        )
    return pd.DataFrame(rows, columns=["class_id", "class", "instances", "tracks"])
