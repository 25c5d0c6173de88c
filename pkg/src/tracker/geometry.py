from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray

from src.domain.errors import ContractViolation
from src.domain.types import BBox

UNIT_TOL = 1e-6


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.w * a.h + b.w * b.h - inter)


def iou_matrix(a: Sequence[BBox], b: Sequence[BBox]) -> NDArray[np.float64]:
    """(len(a), len(b)) の IoU 行列"""
    if not a or not b:
        return np.zeros((len(a), len(b)))
    ta = np.array([box.to_xyxy() for box in a])
    tb = np.array([box.to_xyxy() for box in b])
    x1 = np.maximum(ta[:, None, 0], tb[None, :, 0])
    y1 = np.maximum(ta[:, None, 1], tb[None, :, 1])
    x2 = np.minimum(ta[:, None, 2], tb[None, :, 2])
    y2 = np.minimum(ta[:, None, 3], tb[None, :, 3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)
    area_a = (ta[:, 2] - ta[:, 0]) * (ta[:, 3] - ta[:, 1])
    area_b = (tb[:, 2] - tb[:, 0]) * (tb[:, 3] - tb[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


def cosine_distance(u: NDArray[np.float64], v: NDArray[np.float64]) -> float:
    for name, vec in (("u", u), ("v", v)):
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ContractViolation(f"{name} は単位ベクトルである必要があります: |{name}|={norm}")
    return float(np.clip(1.0 - float(np.dot(u, v)), 0.0, 2.0))
