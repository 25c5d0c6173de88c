from typing import override

import numpy as np

from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.softmax_kernel import softmax_normalize, softmax_normalize_backward

from .base import register
from .base_impl import GradCheckCase


class SoftmaxNormalize(GradCheckCase):
    name = "softmax_normalize"
    summary = "カーネルの softmax 正規化"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        c = int(rng.integers(1, 5))
        k = int(rng.choice([3, 5]))
        logits = rng.standard_normal((c, 1, k, k))
        s = softmax_normalize(logits)
        # 総和は定数なので乱数の cotangent でスカラー化する
        cot = rng.standard_normal(s.shape)
        g = softmax_normalize_backward(cot, s)
        return grad_check(
            softmax_normalize,
            {"logits": logits},
            self.corrupt({"logits": g}, mutate),
            eps=eps,
            tol=tol,
            cotangent=cot,
        )


register(SoftmaxNormalize())
