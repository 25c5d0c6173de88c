from typing import override

import numpy as np

from src.numerics.activations import relu, relu_backward
from src.numerics.gradcheck import GradReport, grad_check

from .base import register
from .base_impl import GradCheckCase

KINK_MARGIN = 0.1  # 0 の近くは微分不可能なので避ける


class Relu(GradCheckCase):
    name = "relu"
    summary = "ReLU (0 近傍を除く)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 5)), 4, 4))
        x += np.sign(x) * KINK_MARGIN
        cot = rng.standard_normal(x.shape)
        g = relu_backward(cot, x)
        return grad_check(
            relu, {"x": x}, self.corrupt({"x": g}, mutate), eps=eps, tol=tol, cotangent=cot
        )


register(Relu())
