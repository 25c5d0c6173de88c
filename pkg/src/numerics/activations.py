from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from src.numerics.tensor import check_same_shape

Array = NDArray[np.float64]


def sigmoid(x: Array) -> Array:
    return np.asarray(expit(np.asarray(x, dtype=np.float64)), dtype=np.float64)


def sigmoid_backward(grad_out: Array, y: Array) -> Array:
    # y は forward の出力
    check_same_shape(grad_out, y, "sigmoid backward")
    return grad_out * y * (1.0 - y)


def relu(x: Array) -> Array:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(grad_out: Array, x: Array) -> Array:
    check_same_shape(grad_out, x, "relu backward")
    return grad_out * (x > 0)
