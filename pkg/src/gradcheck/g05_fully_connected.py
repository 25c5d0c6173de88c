from typing import override

import numpy as np

from src.numerics.dense import fully_connected, fully_connected_backward
from src.numerics.gradcheck import GradReport, grad_check

from .base import register
from .base_impl import GradCheckCase


class FullyConnected(GradCheckCase):
    name = "fully_connected"
    summary = "全結合 y = x Wᵀ + b"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        n, d_in, d_out = (int(v) for v in rng.integers(1, [3, 9, 9]))
        x = rng.standard_normal((n, d_in))
        weights = rng.standard_normal((d_out, d_in))
        bias = rng.standard_normal(d_out)
        cot = rng.standard_normal((n, d_out))
        gx, gw, gb = fully_connected_backward(cot, x, weights)
        return grad_check(
            fully_connected,
            {"x": x, "weights": weights, "bias": bias},
            self.corrupt({"x": gx, "weights": gw, "bias": gb}, mutate),
            eps=eps,
            tol=tol,
            cotangent=cot,
        )


register(FullyConnected())
