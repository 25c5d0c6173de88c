"""フレーム単位の GT / 予測マッチング"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.domain.types import BBox
from src.optimizer.assignment import hungarian
from src.tracker.geometry import iou_matrix

# α ちょうどの IoU を浮動小数の誤差で落とさない
IOU_EPS = 1e-12


@dataclass(frozen=True)
class FramePair:
    gt: int  # gts 内の位置
    pred: int  # preds 内の位置
    iou: float


def match_frame(gts: Sequence[BBox], preds: Sequence[BBox], alpha: float) -> list[FramePair]:
    """IoU >= alpha のペアの中で 件数最大 → IoU 合計最大 となるマッチング。gt 昇順"""
    return match_ious(iou_matrix(gts, preds), alpha)


def match_ious(ious: NDArray[np.float64], alpha: float) -> list[FramePair]:
    if ious.size == 0:
        return []
    cost = np.where(ious >= alpha - IOU_EPS, -ious, np.inf)
    res = hungarian(cost)
    return [FramePair(r, c, float(ious[r, c])) for r, c in res.pairs]
