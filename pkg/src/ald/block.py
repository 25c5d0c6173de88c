"""適応的低域通過ダウンサンプリング (ALD) ブロック

主経路: 3×3 stride 2 の通常畳み込み (zero pad 1)。
低域経路: softmax で正規化した 5×5 depthwise カーネル (reflect pad 2, stride 2)。
両経路の GAP を連結して全結合 2C→C、sigmoid でチャネルごとの融合重み w を得る。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from src.domain.errors import DimensionError, StaleCacheError
from src.domain.types import FusionMode
from src.numerics.activations import sigmoid, sigmoid_backward
from src.numerics.conv import ConvCache, conv2d_backward, conv2d_forward
from src.numerics.dense import Matrix, fully_connected, fully_connected_backward
from src.numerics.pooling import global_avg_pool, global_avg_pool_backward
from src.numerics.softmax_kernel import (
    gaussian_logits,
    softmax_normalize,
    softmax_normalize_backward,
)
from src.numerics.tensor import Tensor, as_tensor

SCONV_KERNEL = 5
MAIN_KERNEL = 3


@dataclass
class ALDBlock:
    channels: int
    sconv_logits: Tensor  # (C, 1, 5, 5)
    main_w: Tensor  # (C, C, 3, 3)
    fc_w: Matrix  # (C, 2C)
    fc_b: Matrix  # (C,)
    fusion: FusionMode = FusionMode.ADDITIVE
    # パラメータ更新のたびに進める。古いキャッシュの検出に使う
    version: int = field(default=0, compare=False)

    def params(self) -> dict[str, Tensor]:
        return {
            "sconv_logits": self.sconv_logits,
            "main_w": self.main_w,
            "fc_w": self.fc_w,
            "fc_b": self.fc_b,
        }

    def touch(self) -> None:
        self.version += 1

    def kernel(self) -> Tensor:
        return softmax_normalize(self.sconv_logits)


@dataclass(frozen=True)
class ALDCache:
    block: ALDBlock
    version: int
    main: ConvCache
    low_cache: ConvCache
    kernel: Tensor
    orig: Tensor
    low: Tensor
    descriptor: Matrix  # (N, 2C)
    weights: Matrix  # (N, C) sigmoid 後


def ald_init(
    channels: int, seed: int | np.random.SeedSequence, fusion: FusionMode = FusionMode.ADDITIVE
) -> ALDBlock:
    if channels < 1:
        raise DimensionError(f"channels は 1 以上: {channels}")
    rng = np.random.default_rng(seed)
    c = channels
    main_w = rng.standard_normal((c, c, MAIN_KERNEL, MAIN_KERNEL)) / math.sqrt(
        c * MAIN_KERNEL * MAIN_KERNEL
    )
    fc_w = rng.standard_normal((c, 2 * c)) / math.sqrt(2 * c)
    return ALDBlock(
        channels=c,
        sconv_logits=gaussian_logits(c, SCONV_KERNEL, sigma=1.0),
        main_w=main_w,
        fc_w=fc_w,
        fc_b=np.zeros(c),
        fusion=fusion,
    )


def ald_forward(block: ALDBlock, x: Tensor) -> tuple[Tensor, ALDCache]:
    x = as_tensor(x, name="ALD input")
    n, c, h, w = x.shape
    if c != block.channels:
        raise DimensionError(
            f"ALD 入力チャネル (axis 1) = {c} がブロックの {block.channels} と不一致"
        )
    if h < SCONV_KERNEL or w < SCONV_KERNEL:
        raise DimensionError(f"ALD 入力の H, W (axes 2,3) は {SCONV_KERNEL} 以上: {h}x{w}")

    orig, main_cache = conv2d_forward(x, block.main_w, stride=2, padding="zero", pad=1)
    kernel = block.kernel()
    low, low_cache = conv2d_forward(
        x, kernel, stride=2, padding="reflect", pad=SCONV_KERNEL // 2, groups=c
    )
    descriptor = np.concatenate(
        [global_avg_pool(orig).reshape(n, c), global_avg_pool(low).reshape(n, c)], axis=1
    )
    weights = sigmoid(fully_connected(descriptor, block.fc_w, block.fc_b))
    wb = weights[:, :, None, None]
    if block.fusion is FusionMode.ADDITIVE:
        y = orig + wb * low
    else:
        y = (1.0 - wb) * orig + wb * low
    cache = ALDCache(
        block=block,
        version=block.version,
        main=main_cache,
        low_cache=low_cache,
        kernel=kernel,
        orig=orig,
        low=low,
        descriptor=descriptor,
        weights=weights,
    )
    return y, cache


def ald_backward(
    block: ALDBlock, cache: ALDCache, grad_y: Tensor
) -> tuple[Tensor, dict[str, Tensor]]:
    """(grad_x, {パラメータ名: 勾配})"""
    if cache.block is not block or cache.version != block.version:
        raise StaleCacheError("ALD のキャッシュが現在のブロック・パラメータと対応していません")
    grad_y = as_tensor(grad_y, name="grad_y")
    if grad_y.shape != cache.orig.shape:
        raise DimensionError(f"grad_y の shape {grad_y.shape} が出力 {cache.orig.shape} と不一致")
    n, c = cache.weights.shape
    wb = cache.weights[:, :, None, None]

    if block.fusion is FusionMode.ADDITIVE:
        g_orig = grad_y.copy()
        g_w = (grad_y * cache.low).sum(axis=(2, 3))
    else:
        g_orig = (1.0 - wb) * grad_y
        g_w = (grad_y * (cache.low - cache.orig)).sum(axis=(2, 3))
    g_low = wb * grad_y

    g_z = sigmoid_backward(g_w, cache.weights)
    g_desc, g_fc_w, g_fc_b = fully_connected_backward(g_z, cache.descriptor, block.fc_w)
    g_orig += global_avg_pool_backward(g_desc[:, :c].reshape(n, c, 1, 1), cache.orig.shape)
    g_low += global_avg_pool_backward(g_desc[:, c:].reshape(n, c, 1, 1), cache.low.shape)

    gx_main, g_main_w = conv2d_backward(g_orig, cache.main)
    gx_low, g_kernel = conv2d_backward(g_low, cache.low_cache)
    g_logits = softmax_normalize_backward(g_kernel, cache.kernel)
    grads = {
        "sconv_logits": g_logits,
        "main_w": g_main_w,
        "fc_w": g_fc_w,
        "fc_b": g_fc_b,
    }
    return gx_main + gx_low, grads
