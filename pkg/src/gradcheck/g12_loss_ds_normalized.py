from typing import override

import numpy as np

from src.ald.losses import loss_ds
from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.tensor import Tensor

from .base import register
from .base_impl import GradCheckCase


class LossDSNormalized(GradCheckCase):
    name = "loss_ds_normalized"
    summary = "明所特徴エネルギーで割った二乗誤差 (明所側にも分母の勾配)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        well = rng.standard_normal((2, 2, 3, 3))
        low = well + 0.3 * rng.standard_normal(well.shape)

        def fn(well: Tensor, low: Tensor) -> float:
            return loss_ds([well], [low], normalize=True)[0]

        _, g_low, g_well = loss_ds([well], [low], normalize=True)
        analytic = {"well": g_well[0], "low": g_low[0]}
        return grad_check(
            fn, {"well": well, "low": low}, self.corrupt(analytic, mutate), eps=eps, tol=tol
        )


register(LossDSNormalized())
