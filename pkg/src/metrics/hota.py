"""HOTA (DetA / AssA / LocA) の計算

α ごとにフレーム単位のマッチングで TP / FN / FP を数え、
TP ペア (gt id, pred id) ごとの関連付け精度 A(c) = TPA / (TPA + FNA + FPA) を
シーケンス全体で求める。クラス統合やシーケンス統合のため、生のカウントを HotaCounts に持つ。
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.domain.config import MetricsConfig
from src.domain.errors import ContractViolation
from src.domain.types import AnnotationRecord, TrackTable
from src.metrics.matching import match_ious
from src.tracker.geometry import iou_matrix

FloatArray = NDArray[np.float64]


@dataclass
class HotaCounts:
    alphas: FloatArray
    tp: FloatArray
    fn: FloatArray
    fp: FloatArray
    ass_sum: FloatArray  # TP ごとの A(c) の総和
    loc_sum: FloatArray  # TP の IoU の総和

    @classmethod
    def zeros(cls, alphas: Sequence[float]) -> HotaCounts:
        a = np.asarray(alphas, dtype=np.float64)
        return cls(a, *(np.zeros(a.shape) for _ in range(5)))

    def __add__(self, other: HotaCounts) -> HotaCounts:
        if not np.array_equal(self.alphas, other.alphas):
            raise ContractViolation("α グリッドが異なるカウントは合算できません")
        return HotaCounts(
            self.alphas,
            self.tp + other.tp,
            self.fn + other.fn,
            self.fp + other.fp,
            self.ass_sum + other.ass_sum,
            self.loc_sum + other.loc_sum,
        )

    @property
    def empty(self) -> bool:
        """GT も予測も 1 件もない"""
        return bool((self.tp + self.fn + self.fp)[0] == 0)

    @property
    def n_gt(self) -> int:
        return int((self.tp + self.fn)[0])


@dataclass
class HotaScores:
    alphas: FloatArray
    deta_alpha: FloatArray
    assa_alpha: FloatArray
    hota_alpha: FloatArray
    loca_alpha: FloatArray
    empty: bool = False  # GT・予測とも空のため 1.0 とした

    @property
    def hota(self) -> float:
        return float(self.hota_alpha.mean())

    @property
    def deta(self) -> float:
        return float(self.deta_alpha.mean())

    @property
    def assa(self) -> float:
        return float(self.assa_alpha.mean())

    @property
    def loca(self) -> float:
        return float(self.loca_alpha.mean())

    @classmethod
    def from_counts(cls, c: HotaCounts) -> HotaScores:
        if c.empty:
            ones = np.ones(c.alphas.shape)
            return cls(c.alphas, ones, ones.copy(), ones.copy(), ones.copy(), empty=True)
        denom = c.tp + c.fn + c.fp
        deta = c.tp / denom
        has_tp = c.tp > 0
        safe_tp = np.maximum(c.tp, 1.0)
        assa = np.where(has_tp, c.ass_sum / safe_tp, 0.0)
        loca = np.where(has_tp, c.loc_sum / safe_tp, 0.0)
        return cls(c.alphas, deta, assa, np.sqrt(deta * assa), loca)


def _frame_groups(
    gt: TrackTable, pred: TrackTable
) -> list[tuple[list[AnnotationRecord], list[AnnotationRecord]]]:
    g = gt.by_frame()
    p = pred.by_frame()
    return [(g.get(f, []), p.get(f, [])) for f in sorted(set(g) | set(p))]


def hota_counts(gt: TrackTable, pred: TrackTable, alphas: Sequence[float]) -> HotaCounts:
    """1 クラス分の GT / 予測から α ごとの生カウントを作る"""
    counts = HotaCounts.zeros(alphas)
    gt_sizes = Counter(r.id for r in gt)
    pred_sizes = Counter(r.id for r in pred)
    frames = [
        (gs, ps, iou_matrix([r.box for r in gs], [r.box for r in ps]))
        for gs, ps in _frame_groups(gt, pred)
    ]

    for k, alpha in enumerate(counts.alphas):
        pair_tp: Counter[tuple[int, int]] = Counter()
        loc = 0.0
        for gs, ps, ious in frames:
            pairs = match_ious(ious, float(alpha))
            for m in pairs:
                pair_tp[(gs[m.gt].id, ps[m.pred].id)] += 1
                loc += m.iou
            counts.fn[k] += len(gs) - len(pairs)
            counts.fp[k] += len(ps) - len(pairs)
        tp = sum(pair_tp.values())
        counts.tp[k] = tp
        counts.loc_sum[k] = loc
        # 各 TP が自分のペアの A(c) を持つので TPA·A(c) をペアごとに足す
        counts.ass_sum[k] = sum(
            n * n / (gt_sizes[g] + pred_sizes[p] - n) for (g, p), n in pair_tp.items()
        )
    return counts


def hota(gt: TrackTable, pred: TrackTable, cfg: MetricsConfig | None = None) -> HotaScores:
    cfg = cfg or MetricsConfig()
    return HotaScores.from_counts(hota_counts(gt, pred, cfg.alphas))
