from typing import override

import numpy as np

from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.pooling import global_avg_pool, global_avg_pool_backward

from .base import register
from .base_impl import GradCheckCase


class GlobalAvgPool(GradCheckCase):
    name = "global_avg_pool"
    summary = "global average pooling"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        n, c = (int(v) for v in rng.integers(1, [3, 5]))
        h, w = (int(v) for v in rng.integers(1, 9, size=2))
        x = rng.standard_normal((n, c, h, w))
        cot = rng.standard_normal((n, c, 1, 1))
        g = global_avg_pool_backward(cot, x.shape)
        return grad_check(
            global_avg_pool,
            {"x": x},
            self.corrupt({"x": g}, mutate),
            eps=eps,
            tol=tol,
            cotangent=cot,
        )


register(GlobalAvgPool())
