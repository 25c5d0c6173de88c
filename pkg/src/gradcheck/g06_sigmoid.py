from typing import override

import numpy as np

from src.numerics.activations import sigmoid, sigmoid_backward
from src.numerics.gradcheck import GradReport, grad_check

from .base import register
from .base_impl import GradCheckCase


class Sigmoid(GradCheckCase):
    name = "sigmoid"
    summary = "sigmoid"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        x = 2.0 * rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 9))))
        cot = rng.standard_normal(x.shape)
        g = sigmoid_backward(cot, sigmoid(x))
        return grad_check(
            sigmoid, {"x": x}, self.corrupt({"x": g}, mutate), eps=eps, tol=tol, cotangent=cot
        )


register(Sigmoid())
