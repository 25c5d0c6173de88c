from typing import override

import numpy as np

from src.ald.losses import loss_ds
from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.tensor import Tensor

from .base import register
from .base_impl import GradCheckCase


class LossDS(GradCheckCase):
    name = "loss_ds"
    summary = "明所・暗所特徴の二乗誤差 (2 層)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        shapes = [(1, 2, 4, 4), (1, 3, 2, 2)]
        inputs = {}
        for i, shape in enumerate(shapes):
            inputs[f"well{i}"] = rng.standard_normal(shape)
            inputs[f"low{i}"] = rng.standard_normal(shape)

        def fn(well0: Tensor, low0: Tensor, well1: Tensor, low1: Tensor) -> float:
            return loss_ds([well0, well1], [low0, low1])[0]

        _, g_low, g_well = loss_ds(
            [inputs["well0"], inputs["well1"]], [inputs["low0"], inputs["low1"]]
        )
        analytic = {"low0": g_low[0], "low1": g_low[1], "well0": g_well[0], "well1": g_well[1]}
        return grad_check(fn, inputs, self.corrupt(analytic, mutate), eps=eps, tol=tol)


register(LossDS())
