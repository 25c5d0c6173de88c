from typing import override

import numpy as np

from src.ald.losses import loss_tv
from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.tensor import Tensor

from .base import register
from .base_impl import GradCheckCase


class LossTVNormalized(GradCheckCase):
    name = "loss_tv_normalized"
    summary = "特徴エネルギーで割った total variation"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        h, w = (int(v) for v in rng.integers(2, 6, size=2))
        f = rng.standard_normal((2, 2, h, w))

        def fn(f: Tensor) -> float:
            return loss_tv([f], normalize=True)[0]

        _, grads = loss_tv([f], normalize=True)
        return grad_check(fn, {"f": f}, self.corrupt({"f": grads[0]}, mutate), eps=eps, tol=tol)


register(LossTVNormalized())
