from __future__ import annotations

import numpy as np

from src.domain.errors import DimensionError
from src.numerics.tensor import Tensor, as_tensor, check_finite, check_same_shape

# 1 フィルタの台 (C_in/groups, k, k) 全体で正規化する
_FILTER_AXES = (1, 2, 3)


def softmax_normalize(logits: Tensor) -> Tensor:
    """カーネルロジット (C_out, C_in/groups, k, k) をフィルタごとに softmax 正規化する。

    出力は各フィルタで総和 1 の正値カーネル (低域通過の DC ゲイン 1 を保証)。
    """
    logits = as_tensor(logits, name="kernel logits")
    k = logits.shape[2]
    if k != logits.shape[3] or k % 2 == 0:
        raise DimensionError(f"カーネルは奇数サイズの正方形 (axes 2,3): {logits.shape[2:]}")
    check_finite(logits, "kernel logits")
    z = logits - logits.max(axis=_FILTER_AXES, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=_FILTER_AXES, keepdims=True)


def softmax_normalize_backward(grad_out: Tensor, normalized: Tensor) -> Tensor:
    """フィルタごとの softmax ヤコビアン・ベクトル積 s ⊙ (g − Σ g s)"""
    grad_out = as_tensor(grad_out, name="grad_out")
    check_same_shape(grad_out, normalized, "softmax backward")
    inner = (grad_out * normalized).sum(axis=_FILTER_AXES, keepdims=True)
    return normalized * (grad_out - inner)


def gaussian_logits(channels: int, k: int = 5, sigma: float = 1.0) -> Tensor:
    """softmax 後に離散ガウシアン (k×k, σ) を再現するロジット (C, 1, k, k)"""
    r = np.arange(k, dtype=np.float64) - k // 2
    yy, xx = np.meshgrid(r, r, indexing="ij")
    # log(exp(-(x²+y²)/2σ²)) 。正規化定数は softmax で消える
    logit = -(xx**2 + yy**2) / (2.0 * sigma**2)
    return np.broadcast_to(logit, (channels, 1, k, k)).copy()
