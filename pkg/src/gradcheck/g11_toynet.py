from typing import override

import numpy as np

from src.ald.block import ALDBlock
from src.ald.toynet import ToyNet, toynet_backward, toynet_forward, toynet_init
from src.numerics.gradcheck import GradReport, grad_check
from src.numerics.tensor import Tensor

from .base import register
from .base_impl import GradCheckCase


def _with_params(net: ToyNet, params: dict[str, Tensor]) -> ToyNet:
    ald = net.ald
    block = ALDBlock(
        ald.channels,
        params.get("ald.sconv_logits", ald.sconv_logits),
        params["ald.main_w"],
        params.get("ald.fc_w", ald.fc_w),
        params.get("ald.fc_b", ald.fc_b),
        ald.fusion,
    )
    return ToyNet(
        params["stem_w"], params["stem_b"], block, params["head_w"], params["head_b"], net.use_ald
    )


class ToyNetCase(GradCheckCase):
    name = "toynet"
    summary = "トイネット全体 (ロジット + stem/ald 特徴への直接勾配)"

    @override
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        rng = np.random.default_rng(seed)
        use_ald = bool(rng.random() < 0.75)
        net = toynet_init(1, int(rng.integers(1, 3)), int(rng.integers(2**31)), use_ald=use_ald)
        net.stem_b = 0.1 * rng.standard_normal(net.stem_b.shape)
        x = rng.standard_normal((int(rng.integers(1, 3)), 1, 8, 8))

        logits, feats, cache = toynet_forward(net, x)
        cot = rng.standard_normal(logits.shape)
        c_stem = rng.standard_normal(feats["stem"].shape)
        c_ald = rng.standard_normal(feats["ald"].shape)
        gx, grads = toynet_backward(net, cache, cot, {"stem": c_stem, "ald": c_ald})

        names = list(net.params())

        def fn(**values: Tensor) -> float:
            x_ = values.pop("x")
            out, f, _ = toynet_forward(_with_params(net, values), x_)
            return float(
                (out * cot).sum() + (f["stem"] * c_stem).sum() + (f["ald"] * c_ald).sum()
            )

        analytic = {"x": gx, **{k: grads[k] for k in names}}
        return grad_check(
            fn,
            {"x": x, **net.params()},
            self.corrupt(analytic, mutate),
            eps=eps,
            tol=tol,
        )


register(ToyNetCase())
