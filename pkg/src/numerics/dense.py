from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from src.domain.errors import DimensionError

Matrix = NDArray[np.float64]


def fully_connected(x: Matrix, weights: Matrix, bias: Matrix) -> Matrix:
    """y = x Wᵀ + b 。x は (N, D_in)、weights は (D_out, D_in)"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or weights.ndim != 2 or bias.ndim != 1:
        raise DimensionError(
            f"fully_connected: x は 2 次元, weights は 2 次元, bias は 1 次元: "
            f"{x.shape}, {weights.shape}, {bias.shape}"
        )
    if x.shape[1] != weights.shape[1]:
        raise DimensionError(
            f"内側の次元が不一致: x axis 1 = {x.shape[1]}, weights axis 1 = {weights.shape[1]}"
        )
    if bias.shape[0] != weights.shape[0]:
        raise DimensionError(
            f"bias 長 {bias.shape[0]} と weights axis 0 = {weights.shape[0]} が不一致"
        )
    return x @ weights.T + bias


def fully_connected_backward(
    grad_out: Matrix, x: Matrix, weights: Matrix
) -> tuple[Matrix, Matrix, Matrix]:
    """(grad_x, grad_weights, grad_bias)"""
    if grad_out.shape != (x.shape[0], weights.shape[0]):
        raise DimensionError(
            f"grad_out は {(x.shape[0], weights.shape[0])} を期待: {grad_out.shape}"
        )
    return grad_out @ weights, grad_out.T @ x, grad_out.sum(axis=0)
