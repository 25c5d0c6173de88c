"""CLEAR MOT (MOTA / FP / FN / IDSW)

フレーム順に、直前フレームで対応していたペアが閾値以上ならそのまま維持し、
残りを Hungarian で対応付ける。GT id の対応先 pred id が前回の対応から変わったら IDSW。
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.domain.types import TrackTable
from src.metrics.matching import IOU_EPS, match_ious
from src.tracker.geometry import iou_matrix


@dataclass
class ClearCounts:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    idsw: int = 0

    def __add__(self, other: ClearCounts) -> ClearCounts:
        return ClearCounts(
            self.tp + other.tp, self.fn + other.fn, self.fp + other.fp, self.idsw + other.idsw
        )

    @property
    def n_gt(self) -> int:
        return self.tp + self.fn

    @property
    def defined(self) -> bool:
        return self.n_gt > 0

    @property
    def mota(self) -> float:
        """GT が 0 件のときは NaN (defined で判定する)"""
        if not self.defined:
            return math.nan
        return 1.0 - (self.fn + self.fp + self.idsw) / self.n_gt


def clear_counts(gt: TrackTable, pred: TrackTable, iou_thr: float = 0.5) -> ClearCounts:
    counts = ClearCounts()
    g_frames = gt.by_frame()
    p_frames = pred.by_frame()
    prev_pair: dict[int, int] = {}  # 直前フレームでの gt id -> pred id
    last_match: dict[int, int] = {}  # これまでで最後に対応した pred id

    for f in sorted(set(g_frames) | set(p_frames)):
        gs = g_frames.get(f, [])
        ps = p_frames.get(f, [])
        ious = iou_matrix([r.box for r in gs], [r.box for r in ps])
        pred_pos = {r.id: j for j, r in enumerate(ps)}

        matched: list[tuple[int, int]] = []
        for i, g in enumerate(gs):
            j = pred_pos.get(prev_pair.get(g.id, -1))
            if j is not None and ious[i, j] >= iou_thr - IOU_EPS:
                matched.append((i, j))
        kept_g = {i for i, _ in matched}
        kept_p = {j for _, j in matched}
        rest_g = [i for i in range(len(gs)) if i not in kept_g]
        rest_p = [j for j in range(len(ps)) if j not in kept_p]
        if rest_g and rest_p:
            sub = ious[np.ix_(rest_g, rest_p)]
            matched += [(rest_g[m.gt], rest_p[m.pred]) for m in match_ious(sub, iou_thr)]

        prev_pair = {}
        for i, j in matched:
            gid, pid = gs[i].id, ps[j].id
            if gid in last_match and last_match[gid] != pid:
                counts.idsw += 1
            last_match[gid] = pid
            prev_pair[gid] = pid
        counts.tp += len(matched)
        counts.fn += len(gs) - len(matched)
        counts.fp += len(ps) - len(matched)
    return counts


def mota(gt: TrackTable, pred: TrackTable, iou_thr: float = 0.5) -> tuple[float, int, int, int]:
    """(MOTA, FP, FN, IDSW)。GT が空なら MOTA は NaN"""
    c = clear_counts(gt, pred, iou_thr)
    return c.mota, c.fp, c.fn, c.idsw
