from __future__ import annotations

import numpy as np

from src.domain.errors import DimensionError
from src.numerics.tensor import Tensor, as_tensor


def global_avg_pool(x: Tensor) -> Tensor:
    x = as_tensor(x, name="input")
    if x.shape[2] < 1 or x.shape[3] < 1:
        raise DimensionError(f"H, W (axes 2,3) は 1 以上: {x.shape}")
    return x.mean(axis=(2, 3), keepdims=True)


def global_avg_pool_backward(grad_out: Tensor, input_shape: tuple[int, ...]) -> Tensor:
    n, c, h, w = input_shape
    grad_out = as_tensor(grad_out, name="grad_out")
    if grad_out.shape != (n, c, 1, 1):
        raise DimensionError(f"grad_out は {(n, c, 1, 1)} を期待: {grad_out.shape}")
    return np.broadcast_to(grad_out / (h * w), (n, c, h, w)).copy()
