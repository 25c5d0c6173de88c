"""机上実験用の小さなネットワーク

stem (3×3 conv + bias + ReLU) → ALD (または通常の stride 2 conv) → head (1×1 conv + bias)
出力は半解像度の per-pixel スコアマップ (ロジット)。
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.ald.block import ALDBlock, ALDCache, ald_backward, ald_forward, ald_init
from src.domain.errors import DimensionError
from src.domain.types import FusionMode
from src.numerics.activations import relu, relu_backward, sigmoid
from src.numerics.conv import ConvCache, conv2d_backward, conv2d_forward
from src.numerics.tensor import Tensor

FEATURE_LAYERS = ("stem", "ald")


@dataclass
class ToyNet:
    stem_w: Tensor  # (C, C_in, 3, 3)
    stem_b: Tensor  # (C,)
    ald: ALDBlock
    head_w: Tensor  # (1, C, 1, 1)
    head_b: Tensor  # (1,)
    use_ald: bool = True

    def params(self) -> dict[str, Tensor]:
        out = {"stem_w": self.stem_w, "stem_b": self.stem_b}
        if self.use_ald:
            out.update({f"ald.{k}": v for k, v in self.ald.params().items()})
        else:
            out["ald.main_w"] = self.ald.main_w
        out["head_w"] = self.head_w
        out["head_b"] = self.head_b
        return out

    def touch(self) -> None:
        self.ald.touch()


@dataclass(frozen=True)
class ToyNetCache:
    stem: ConvCache
    stem_pre: Tensor
    down: ALDCache | ConvCache
    head: ConvCache


def toynet_init(
    in_channels: int,
    channels: int,
    seed: int | np.random.SeedSequence,
    *,
    use_ald: bool = True,
    fusion: FusionMode = FusionMode.ADDITIVE,
) -> ToyNet:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_stem, s_ald, s_head = ss.spawn(3)
    rng = np.random.default_rng(s_stem)
    stem_w = rng.standard_normal((channels, in_channels, 3, 3)) / math.sqrt(in_channels * 9)
    rng = np.random.default_rng(s_head)
    head_w = rng.standard_normal((1, channels, 1, 1)) / math.sqrt(channels)
    return ToyNet(
        stem_w=stem_w,
        stem_b=np.zeros(channels),
        ald=ald_init(channels, s_ald, fusion),
        head_w=head_w,
        head_b=np.zeros(1),
        use_ald=use_ald,
    )


def toynet_forward(net: ToyNet, x: Tensor) -> tuple[Tensor, dict[str, Tensor], ToyNetCache]:
    """(ロジット, {"stem": ..., "ald": ...} 特徴, キャッシュ)"""
    if x.ndim != 4 or x.shape[1] != net.stem_w.shape[1]:
        raise DimensionError(f"ToyNet 入力 shape が不正: {x.shape}")
    pre, stem_cache = conv2d_forward(x, net.stem_w, stride=1, padding="zero", pad=1)
    pre = pre + net.stem_b[None, :, None, None]
    stem = relu(pre)
    down: Tensor
    down_cache: ALDCache | ConvCache
    if net.use_ald:
        down, down_cache = ald_forward(net.ald, stem)
    else:
        down, down_cache = conv2d_forward(stem, net.ald.main_w, stride=2, padding="zero", pad=1)
    logits, head_cache = conv2d_forward(down, net.head_w)
    logits = logits + net.head_b[None, :, None, None]
    cache = ToyNetCache(stem=stem_cache, stem_pre=pre, down=down_cache, head=head_cache)
    return logits, {"stem": stem, "ald": down}, cache


def toynet_backward(
    net: ToyNet,
    cache: ToyNetCache,
    grad_logits: Tensor,
    feature_grads: dict[str, Tensor] | None = None,
) -> tuple[Tensor, dict[str, Tensor]]:
    """(grad_x, {パラメータ名: 勾配})。feature_grads は特徴に直接かかる損失の勾配"""
    feature_grads = feature_grads or {}
    grads: dict[str, Tensor] = {"head_b": grad_logits.sum(axis=(0, 2, 3))}
    g_down, grads["head_w"] = conv2d_backward(grad_logits, cache.head)
    if "ald" in feature_grads:
        g_down = g_down + feature_grads["ald"]

    if isinstance(cache.down, ALDCache):
        g_stem, g_ald = ald_backward(net.ald, cache.down, g_down)
        grads.update({f"ald.{k}": v for k, v in g_ald.items()})
    else:
        g_stem, grads["ald.main_w"] = conv2d_backward(g_down, cache.down)
    if "stem" in feature_grads:
        g_stem = g_stem + feature_grads["stem"]

    g_pre = relu_backward(g_stem, cache.stem_pre)
    grads["stem_b"] = g_pre.sum(axis=(0, 2, 3))
    g_x, grads["stem_w"] = conv2d_backward(g_pre, cache.stem)
    return g_x, grads


def bce_with_logits(
    logits: Tensor, target: Tensor, smoothing: float = 0.0
) -> tuple[float, Tensor]:
    """要素平均の二値交差エントロピーと、ロジットに対する勾配

    smoothing > 0 のときターゲットを t(1 − ε) + ε/2 に寄せる。
    """
    if logits.shape != target.shape:
        raise DimensionError(
            f"ロジット {logits.shape} とターゲット {target.shape} の shape が不一致"
        )
    if smoothing:
        target = target * (1.0 - smoothing) + 0.5 * smoothing
    loss = np.logaddexp(0.0, logits) - target * logits
    grad = (sigmoid(logits) - target) / logits.size
    return float(loss.mean()), grad
