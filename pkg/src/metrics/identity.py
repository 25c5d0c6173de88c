"""IDF1

GT 軌跡と予測軌跡の 1 対 1 対応を、同一フレームで IoU >= 閾値となる回数 (IDTP) の
総和が最大になるよう大域的に決める。割当は metrics.assignment_backend で選ぶ。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.domain.types import TrackTable
from src.metrics.matching import IOU_EPS
from src.optimizer.assignment import solve_assignment
from src.tracker.geometry import iou_matrix


@dataclass
class IdentityCounts:
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0

    def __add__(self, other: IdentityCounts) -> IdentityCounts:
        return IdentityCounts(
            self.idtp + other.idtp, self.idfp + other.idfp, self.idfn + other.idfn
        )

    @property
    def empty(self) -> bool:
        return self.idtp + self.idfp + self.idfn == 0

    @property
    def idf1(self) -> float:
        """GT・予測とも空なら 1.0"""
        if self.empty:
            return 1.0
        return 2 * self.idtp / (2 * self.idtp + self.idfp + self.idfn)


def identity_counts(
    gt: TrackTable, pred: TrackTable, iou_thr: float = 0.5, backend: str = "hungarian"
) -> IdentityCounts:
    gt_ids = gt.ids()
    pred_ids = pred.ids()
    gi = {g: i for i, g in enumerate(gt_ids)}
    pj = {p: j for j, p in enumerate(pred_ids)}
    overlap = np.zeros((len(gt_ids), len(pred_ids)))

    g_frames = gt.by_frame()
    p_frames = pred.by_frame()
    for f in sorted(set(g_frames) & set(p_frames)):
        gs, ps = g_frames[f], p_frames[f]
        ious = iou_matrix([r.box for r in gs], [r.box for r in ps])
        for a, b in zip(*np.nonzero(ious >= iou_thr - IOU_EPS), strict=True):
            overlap[gi[gs[a].id], pj[ps[b].id]] += 1

    idtp = 0
    if overlap.size:
        # 重なり 0 のペアも許可して総和最大化 (件数最大化で重みを犠牲にしない)
        res = solve_assignment(-overlap, backend)
        idtp = int(sum(overlap[r, c] for r, c in res.pairs))
    return IdentityCounts(idtp=idtp, idfp=len(pred) - idtp, idfn=len(gt) - idtp)


def idf1(
    gt: TrackTable, pred: TrackTable, iou_thr: float = 0.5, backend: str = "hungarian"
) -> tuple[float, int, int, int]:
    """(IDF1, IDTP, IDFP, IDFN)"""
    c = identity_counts(gt, pred, iou_thr, backend)
    return c.idf1, c.idtp, c.idfp, c.idfn
