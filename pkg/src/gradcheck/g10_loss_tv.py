from typing import override

import numpy as np

from src.ald.losses import loss_tv
from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.tensor import Tensor

from .base import register
from .base_impl import GradCheckCase


class LossTV(GradCheckCase):
    name = "loss_tv"
    summary = "特徴マップの total variation (二乗一次差分)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        n, c = (int(v) for v in rng.integers(1, [3, 4]))
        h, w = (int(v) for v in rng.integers(2, 7, size=2))
        f = rng.standard_normal((n, c, h, w))

        def fn(f: Tensor) -> float:
            return loss_tv([f])[0]

        _, grads = loss_tv([f])
        return grad_check(fn, {"f": f}, self.corrupt({"f": grads[0]}, mutate), eps=eps, tol=tol)


register(LossTV())
