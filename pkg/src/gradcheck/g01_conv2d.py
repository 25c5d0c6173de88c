from typing import override

import numpy as np

from src.numerics.conv import conv2d, conv2d_backward, conv2d_forward
from src.numerics.gradcheck import GradReport, grad_check

from .base import register
from .base_impl import GradCheckCase


class Conv2dZeroPad(GradCheckCase):
    name = "conv2d"
    summary = "通常畳み込み (zero pad 1, stride 1/2)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        n, c_in, c_out = (int(v) for v in rng.integers(1, [3, 4, 4]))
        h, w = (int(v) for v in rng.integers(4, 9, size=2))
        stride = int(rng.integers(1, 3))
        x = rng.standard_normal((n, c_in, h, w))
        kernel = rng.standard_normal((c_out, c_in, 3, 3))
        out, cache = conv2d_forward(x, kernel, stride=stride, padding="zero", pad=1)
        cot = rng.standard_normal(out.shape)
        gx, gk = conv2d_backward(cot, cache)
        return grad_check(
            lambda x, kernel: conv2d(x, kernel, stride=stride, padding="zero", pad=1),
            {"x": x, "kernel": kernel},
            self.corrupt({"x": gx, "kernel": gk}, mutate),
            eps=eps,
            tol=tol,
            cotangent=cot,
        )


register(Conv2dZeroPad())
