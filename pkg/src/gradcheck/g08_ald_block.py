from typing import override

import numpy as np

from src.ald.block import ALDBlock, ald_backward, ald_forward, ald_init
from src.domain.types import FusionMode
from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.tensor import Tensor

from .base import register
from .base_impl import GradCheckCase


class ALDBlockCase(GradCheckCase):
    name = "ald_block"
    summary = "ALD ブロック (入力と全パラメータ)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        n, c = (int(v) for v in rng.integers(1, [3, 4]))
        h, w = (int(v) for v in rng.integers(5, 9, size=2))
        fusion = FusionMode.CONVEX if rng.random() < 0.5 else FusionMode.ADDITIVE
        block = ald_init(c, int(rng.integers(2**31)), fusion)
        # 初期値のままだと logits が全チャネル同じなのでばらつかせる
        block.sconv_logits = block.sconv_logits + 0.3 * rng.standard_normal((c, 1, 5, 5))
        block.fc_b = 0.5 * rng.standard_normal(c)
        x = rng.standard_normal((n, c, h, w))

        y, cache = ald_forward(block, x)
        cot = rng.standard_normal(y.shape)
        gx, grads = ald_backward(block, cache, cot)

        def forward(
            x: Tensor, sconv_logits: Tensor, main_w: Tensor, fc_w: Tensor, fc_b: Tensor
        ) -> Tensor:
            b = ALDBlock(c, sconv_logits, main_w, fc_w, fc_b, fusion)
            return ald_forward(b, x)[0]

        return grad_check(
            forward,
            {"x": x, **block.params()},
            self.corrupt({"x": gx, **grads}, mutate),
            eps=eps,
            tol=tol,
            cotangent=cot,
        )


register(ALDBlockCase())
