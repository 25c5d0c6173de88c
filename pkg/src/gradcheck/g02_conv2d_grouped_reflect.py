from typing import override

import numpy as np

from src.numerics.conv import conv2d, conv2d_backward, conv2d_forward
from src.numerics.gradcheck import GradReport, grad_check

from .base import register
from .base_impl import GradCheckCase


class Conv2dGroupedReflect(GradCheckCase):
    name = "conv2d_grouped_reflect"
    summary = "depthwise 5×5 畳み込み (reflect pad 2, stride 2)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        n, c = (int(v) for v in rng.integers(1, [3, 5]))
        h, w = (int(v) for v in rng.integers(5, 9, size=2))
        x = rng.standard_normal((n, c, h, w))
        kernel = rng.standard_normal((c, 1, 5, 5))
        out, cache = conv2d_forward(x, kernel, stride=2, padding="reflect", pad=2, groups=c)
        cot = rng.standard_normal(out.shape)
        gx, gk = conv2d_backward(cot, cache)
        return grad_check(
            lambda x, kernel: conv2d(x, kernel, stride=2, padding="reflect", pad=2, groups=c),
            {"x": x, "kernel": kernel},
            self.corrupt({"x": gx, "kernel": gk}, mutate),
            eps=eps,
            tol=tol,
            cotangent=cot,
        )


register(Conv2dGroupedReflect())
