from __future__ import annotations

import logging

import numpy as np

from src.domain.errors import ContractViolation
from src.domain.types import AnnotationRecord, BBox, TrackTable

logger = logging.getLogger(__name__)


def linear_interpolation(table: TrackTable, max_gap: int = 20) -> TrackTable:
    """トラックごとに 1 < gap <= max_gap の欠損フレームを線形補間で埋める。

    x, y, w, h と conf を補間し、class_id は前側の観測を引き継ぐ。
    max_gap より長い欠損はそのまま残す。
    """
    if max_gap < 0:
        raise ContractViolation(f"max_gap は 0 以上: {max_gap}")
    out: list[AnnotationRecord] = list(table.records)
    inserted = 0
    for tid, rows in table.by_id().items():
        if tid < 0:
            continue
        for prev, nxt in zip(rows, rows[1:], strict=False):
            gap = nxt.frame - prev.frame
            if gap <= 1 or gap > max_gap:
                continue
            a = np.r_[prev.box.to_tlwh(), prev.conf]
            b = np.r_[nxt.box.to_tlwh(), nxt.conf]
            for f in range(prev.frame + 1, nxt.frame):
                t = (f - prev.frame) / gap
                x, y, w, h, conf = a + (b - a) * t
                out.append(
                    AnnotationRecord(
                        frame=f,
                        id=tid,
                        box=BBox(float(x), float(y), float(w), float(h)),
                        conf=float(conf),
                        class_id=prev.class_id,
                        visibility=prev.visibility,
                    )
                )
                inserted += 1
    logger.debug("interpolated %d boxes (max_gap=%d)", inserted, max_gap)
    return TrackTable(out)
