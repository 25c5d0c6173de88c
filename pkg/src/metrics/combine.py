"""クラス別カウントの統合と評価の入口

- det_avg: 全クラスの生カウント (TP/FN/FP, 関連付けの和) をプールしてから一度だけ式を評価
- class_avg: クラスごとに指標を出してから単純平均
GT に現れないクラスはどちらのモードでも除外し、警告に残す。
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import reduce
from typing import Any

import numpy as np
from numpy.typing import NDArray

from src.domain.config import MetricsConfig
from src.domain.errors import MetricUndefinedError
from src.domain.types import AggregationMode, ObjectClass, TrackTable
from src.metrics.clear import ClearCounts, clear_counts
from src.metrics.hota import HotaCounts, HotaScores, hota_counts
from src.metrics.identity import IdentityCounts, identity_counts

logger = logging.getLogger(__name__)

HEADLINE = ("HOTA", "DetA", "AssA", "LocA", "MOTA", "IDF1")


def class_name(class_id: int) -> str:
    try:
        return ObjectClass(class_id).name.lower()
    except ValueError:
        return str(class_id)


@dataclass
class ClassCounts:
    hota: HotaCounts
    clear: ClearCounts
    identity: IdentityCounts

    def __add__(self, other: ClassCounts) -> ClassCounts:
        return ClassCounts(
            self.hota + other.hota, self.clear + other.clear, self.identity + other.identity
        )

    @property
    def n_gt(self) -> int:
        return self.clear.n_gt


@dataclass
class ClassScores:
    hota: HotaScores
    mota: float
    idf1: float
    idsw: int
    fp: int
    fn: int
    n_gt: int

    @classmethod
    def from_counts(cls, c: ClassCounts) -> ClassScores:
        return cls(
            hota=HotaScores.from_counts(c.hota),
            mota=c.clear.mota,
            idf1=c.identity.idf1,
            idsw=c.clear.idsw,
            fp=c.clear.fp,
            fn=c.clear.fn,
            n_gt=c.n_gt,
        )

    def headline(self) -> dict[str, float]:
        return {
            "HOTA": self.hota.hota,
            "DetA": self.hota.deta,
            "AssA": self.hota.assa,
            "LocA": self.hota.loca,
            "MOTA": self.mota,
            "IDF1": self.idf1,
        }


@dataclass
class EvalResult:
    mode: AggregationMode
    alphas: NDArray[np.float64]
    deta_alpha: NDArray[np.float64]
    assa_alpha: NDArray[np.float64]
    hota_alpha: NDArray[np.float64]
    loca_alpha: NDArray[np.float64]
    mota: float
    idf1: float
    idsw: int
    fp: int
    fn: int
    idtp: int
    idfp: int
    idfn: int
    per_class: dict[int, ClassScores] = field(default_factory=dict)
    counts: dict[int, ClassCounts] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    # "empty": GT・予測とも空, "mota_undefined": GT が空で MOTA を定義できない
    flags: list[str] = field(default_factory=list)

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

    def headline(self) -> dict[str, float]:
        return {
            "HOTA": self.hota,
            "DetA": self.deta,
            "AssA": self.assa,
            "LocA": self.loca,
            "MOTA": self.mota,
            "IDF1": self.idf1,
        }

    def to_dict(self) -> dict[str, Any]:
        """key=value レポート用のフラットな辞書 (キーは mode 付き)"""
        p = self.mode.value
        out: dict[str, Any] = {f"{p}.{k}": v for k, v in self.headline().items()}
        out |= {
            f"{p}.IDSW": self.idsw,
            f"{p}.FP": self.fp,
            f"{p}.FN": self.fn,
            f"{p}.IDTP": self.idtp,
            f"{p}.IDFP": self.idfp,
            f"{p}.IDFN": self.idfn,
        }
        for a, h, d, s in zip(
            self.alphas, self.hota_alpha, self.deta_alpha, self.assa_alpha, strict=True
        ):
            key = f"{a:.2f}"
            out[f"{p}.HOTA@{key}"] = float(h)
            out[f"{p}.DetA@{key}"] = float(d)
            out[f"{p}.AssA@{key}"] = float(s)
        for c, sc in self.per_class.items():
            for k, v in sc.headline().items():
                out[f"{p}.{class_name(c)}.{k}"] = v
        return out


def class_counts(
    gt: TrackTable, pred: TrackTable, cfg: MetricsConfig | None = None
) -> ClassCounts:
    """1 クラス (またはクラスを区別しない) の生カウント"""
    cfg = cfg or MetricsConfig()
    return ClassCounts(
        hota=hota_counts(gt, pred, cfg.alphas),
        clear=clear_counts(gt, pred, cfg.iou_thr),
        identity=identity_counts(gt, pred, cfg.iou_thr, cfg.assignment_backend),
    )


def per_class_counts(
    gt: TrackTable, pred: TrackTable, cfg: MetricsConfig | None = None
) -> dict[int, ClassCounts]:
    cfg = cfg or MetricsConfig()
    gt = gt.filter_visibility(cfg.gt_visibility_threshold)
    classes = sorted(set(gt.class_ids()) | set(pred.class_ids()))
    return {c: class_counts(gt.filter_class(c), pred.filter_class(c), cfg) for c in classes}


def merge_counts(items: Iterable[Mapping[int, ClassCounts]]) -> dict[int, ClassCounts]:
    """シーケンスごとのカウントをクラス単位で足し合わせる (クラス id 昇順)"""
    out: dict[int, ClassCounts] = {}
    for item in items:
        for c in sorted(item):
            out[c] = out[c] + item[c] if c in out else item[c]
    return dict(sorted(out.items()))


def _result(
    mode: AggregationMode,
    scores: HotaScores,
    pooled: ClassCounts,
    mota: float,
    idf1: float,
) -> EvalResult:
    return EvalResult(
        mode=mode,
        alphas=scores.alphas,
        deta_alpha=scores.deta_alpha,
        assa_alpha=scores.assa_alpha,
        hota_alpha=scores.hota_alpha,
        loca_alpha=scores.loca_alpha,
        mota=mota,
        idf1=idf1,
        idsw=pooled.clear.idsw,
        fp=pooled.clear.fp,
        fn=pooled.clear.fn,
        idtp=pooled.identity.idtp,
        idfp=pooled.identity.idfp,
        idfn=pooled.identity.idfn,
    )


def combine_classes(
    per_class: Mapping[int, ClassCounts], mode: AggregationMode | str = AggregationMode.DET_AVG
) -> EvalResult:
    mode = AggregationMode(mode)
    warnings = [
        f"class {c} ({class_name(c)}) は GT に存在しないため除外しました"
        for c, cnt in sorted(per_class.items())
        if cnt.n_gt == 0
    ]
    present = {c: cnt for c, cnt in sorted(per_class.items()) if cnt.n_gt > 0}
    if not present:
        raise MetricUndefinedError("GT を持つクラスがありません")
    for w in warnings:
        logger.warning(w)

    per_scores = {c: ClassScores.from_counts(cnt) for c, cnt in present.items()}
    pooled = reduce(lambda a, b: a + b, present.values())

    if mode is AggregationMode.DET_AVG:
        res = _result(
            mode,
            HotaScores.from_counts(pooled.hota),
            pooled,
            pooled.clear.mota,
            pooled.identity.idf1,
        )
    else:
        hs = [s.hota for s in per_scores.values()]
        mean_scores = HotaScores(
            alphas=hs[0].alphas,
            deta_alpha=np.mean([h.deta_alpha for h in hs], axis=0),
            assa_alpha=np.mean([h.assa_alpha for h in hs], axis=0),
            hota_alpha=np.mean([h.hota_alpha for h in hs], axis=0),
            loca_alpha=np.mean([h.loca_alpha for h in hs], axis=0),
        )
        res = _result(
            mode,
            mean_scores,
            pooled,
            float(np.mean([s.mota for s in per_scores.values()])),
            float(np.mean([s.idf1 for s in per_scores.values()])),
        )
    res.per_class = per_scores
    res.counts = dict(present)
    res.warnings = warnings
    return res


def combine_agnostic(counts: ClassCounts, mode: AggregationMode | str) -> EvalResult:
    """GT が空のときの評価。クラスを区別せずに 1 クラスとして扱う"""
    mode = AggregationMode(mode)
    scores = HotaScores.from_counts(counts.hota)
    res = _result(mode, scores, counts, counts.clear.mota, counts.identity.idf1)
    res.counts = {0: counts}
    if scores.empty:
        res.flags.append("empty")
    if not counts.clear.defined:
        res.flags.append("mota_undefined")
    return res


def combine(
    per_class: Mapping[int, ClassCounts],
    mode: AggregationMode | str,
    cfg: MetricsConfig | None = None,
) -> EvalResult:
    """GT のあるクラスがあれば combine_classes、なければクラス非依存で評価する"""
    cfg = cfg or MetricsConfig()
    if any(cnt.n_gt > 0 for cnt in per_class.values()):
        return combine_classes(per_class, mode)
    empty = ClassCounts(HotaCounts.zeros(cfg.alphas), ClearCounts(), IdentityCounts())
    pooled = reduce(lambda a, b: a + b, per_class.values(), empty)
    return combine_agnostic(pooled, mode)


def evaluate(
    gt: TrackTable,
    pred: TrackTable,
    cfg: MetricsConfig | None = None,
    mode: AggregationMode | str | None = None,
) -> EvalResult:
    cfg = cfg or MetricsConfig()
    return combine(per_class_counts(gt, pred, cfg), mode or cfg.aggregation, cfg)
