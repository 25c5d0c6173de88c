"""グループ畳み込み (相互相関) の forward / backward

入力 (N, C, H, W)、カーネル (C_out, C/groups, k, k)。
パディングは zero / reflect。reflect は端の画素を含まない鏡映 (numpy の "reflect")。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.domain.errors import DimensionError
from src.numerics.tensor import Tensor, as_tensor

PadMode = Literal["zero", "reflect"]


@dataclass(frozen=True)
class ConvCache:
    input_shape: tuple[int, int, int, int]
    windows: Tensor  # (N, G, Cg, Ho, Wo, k, k)
    kernel: Tensor
    stride: int
    padding: PadMode
    pad: int
    groups: int

    @property
    def output_shape(self) -> tuple[int, int, int, int]:
        n, _, _, ho, wo, _, _ = self.windows.shape
        return (n, int(self.kernel.shape[0]), ho, wo)


def _check_shapes(
    x: Tensor, kernel: Tensor, stride: int, padding: PadMode, pad: int, groups: int
) -> tuple[int, int]:
    n, c, h, w = x.shape
    c_out, c_per_group, kh, kw = kernel.shape
    if groups < 1 or stride < 1 or pad < 0:
        raise DimensionError(
            f"groups/stride/pad が不正: groups={groups}, stride={stride}, pad={pad}"
        )
    if kh != kw:
        raise DimensionError(f"正方カーネルのみ対応: kernel axes 2,3 = {kh}x{kw}")
    if c != c_per_group * groups:
        raise DimensionError(
            f"入力チャネル (axis 1) = {c} が"
            f" カーネル axis 1 × groups = {c_per_group}×{groups} と不一致"
        )
    if c_out % groups:
        raise DimensionError(
            f"出力チャネル (kernel axis 0) = {c_out} が groups={groups} で割り切れません"
        )
    if padding == "reflect" and pad >= min(h, w):
        raise DimensionError(f"reflect パディング pad={pad} は入力 (axes 2,3) = {h}x{w} 未満が必要")
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise DimensionError(f"出力サイズが正になりません: axes 2,3 -> {ho}x{wo}")
    return ho, wo


def _pad(x: Tensor, pad: int, padding: PadMode) -> Tensor:
    if pad == 0:
        return x
    widths = ((0, 0), (0, 0), (pad, pad), (pad, pad))
    if padding == "zero":
        return np.pad(x, widths)
    return np.pad(x, widths, mode="reflect")


def _fold_reflect(g: Tensor, pad: int, axis: int) -> Tensor:
    """reflect パディング領域の勾配を元の画素へ足し戻す"""
    size = g.shape[axis] - 2 * pad
    inner = np.take(g, np.arange(pad, pad + size), axis=axis).copy()
    for t in range(pad):
        # 左端 padded[t] = x[pad - t]
        src = np.take(g, t, axis=axis)
        idx = [slice(None)] * g.ndim
        idx[axis] = pad - t
        inner[tuple(idx)] += src
        # 右端 padded[pad + size + t] = x[size - 2 - t]
        src = np.take(g, pad + size + t, axis=axis)
        idx[axis] = size - 2 - t
        inner[tuple(idx)] += src
    return inner


def conv2d_forward(
    x: Tensor,
    kernel: Tensor,
    stride: int = 1,
    padding: PadMode = "zero",
    pad: int = 0,
    groups: int = 1,
) -> tuple[Tensor, ConvCache]:
    x = as_tensor(x, name="input")
    kernel = as_tensor(kernel, name="kernel")
    ho, wo = _check_shapes(x, kernel, stride, padding, pad, groups)
    n, c, _, _ = x.shape
    c_out, cg, k, _ = kernel.shape

    xp = _pad(x, pad, padding)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :ho, :wo]
    win = win.reshape(n, groups, cg, ho, wo, k, k)
    kr = kernel.reshape(groups, c_out // groups, cg, k, k)
    out = np.einsum("ngchwij,gocij->ngohw", win, kr, optimize=True).reshape(n, c_out, ho, wo)
    cache = ConvCache(
        input_shape=(n, c, x.shape[2], x.shape[3]),
        windows=win,
        kernel=kernel,
        stride=stride,
        padding=padding,
        pad=pad,
        groups=groups,
    )
    return out, cache


def conv2d(
    x: Tensor,
    kernel: Tensor,
    stride: int = 1,
    padding: PadMode = "zero",
    pad: int = 0,
    groups: int = 1,
) -> Tensor:
    out, _ = conv2d_forward(x, kernel, stride, padding, pad, groups)
    return out


def conv2d_backward(grad_out: Tensor, cache: ConvCache) -> tuple[Tensor, Tensor]:
    """(grad_input, grad_kernel) を返す"""
    grad_out = as_tensor(grad_out, name="grad_out")
    if grad_out.shape != cache.output_shape:
        raise DimensionError(
            f"grad_out の shape {grad_out.shape} が forward 出力 {cache.output_shape} と不一致"
        )
    n, c, h, w = cache.input_shape
    c_out, cg, k, _ = cache.kernel.shape
    g = cache.groups
    s = cache.stride
    ho, wo = grad_out.shape[2], grad_out.shape[3]

    go = grad_out.reshape(n, g, c_out // g, ho, wo)
    kr = cache.kernel.reshape(g, c_out // g, cg, k, k)
    grad_kernel = np.einsum("ngchwij,ngohw->gocij", cache.windows, go, optimize=True)
    grad_win = np.einsum("ngohw,gocij->ngchwij", go, kr, optimize=True).reshape(n, c, ho, wo, k, k)

    p = cache.pad
    grad_xp = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            grad_xp[:, :, i : i + s * ho : s, j : j + s * wo : s] += grad_win[:, :, :, :, i, j]

    if p == 0:
        grad_x = grad_xp
    elif cache.padding == "zero":
        grad_x = grad_xp[:, :, p : p + h, p : p + w]
    else:
        grad_x = _fold_reflect(_fold_reflect(grad_xp, p, axis=2), p, axis=3)
    return np.ascontiguousarray(grad_x), grad_kernel.reshape(c_out, cg, k, k)
