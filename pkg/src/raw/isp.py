"""可視化用の最小 ISP (バイリニアデモザイク → ホワイトバランス → ガンマ)"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from src.domain.errors import ContractViolation, FormatError
from src.domain.types import BayerPattern, RawFrame, RgbImage
from src.raw.frame import normalize

# 2×2 ブロック内の (row, col) -> 色 (0=R, 1=G, 2=B)
_LAYOUT: dict[BayerPattern, tuple[tuple[int, int], ...]] = {
    BayerPattern.RGGB: ((0, 1), (1, 2)),
    BayerPattern.BGGR: ((2, 1), (1, 0)),
    BayerPattern.GRBG: ((1, 0), (2, 1)),
    BayerPattern.GBRG: ((1, 2), (0, 1)),
}

# R/B は 4 近傍の十字と斜め、G は十字
_K_RB = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float64) / 4.0
_K_G = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]], dtype=np.float64) / 4.0


def channel_masks(height: int, width: int, pattern: BayerPattern) -> NDArray[np.float64]:
    """(3, H, W) の 0/1 マスク"""
    masks = np.zeros((3, height, width), dtype=np.float64)
    for dr in range(2):
        for dc in range(2):
            masks[_LAYOUT[pattern][dr][dc], dr::2, dc::2] = 1.0
    return masks


def demosaic_plane(plane: NDArray[np.float64], pattern: BayerPattern) -> NDArray[np.float64]:
    """正規化済みモザイク (H, W) を (H, W, 3) に補間する。境界は鏡映"""
    h, w = plane.shape
    if h % 2 or w % 2:
        raise FormatError(f"モザイクの幅・高さは偶数である必要があります: {w}x{h}")
    masks = channel_masks(h, w, pattern)
    out = np.empty((h, w, 3), dtype=np.float64)
    for ch, kernel in enumerate((_K_RB, _K_G, _K_RB)):
        # mode="mirror" は端画素を含まない鏡映なので Bayer の位相が保たれる
        out[:, :, ch] = ndimage.convolve(plane * masks[ch], kernel, mode="mirror")
    return out


def demosaic_bilinear(raw: RawFrame) -> RgbImage:
    plane = normalize(raw)[0, 0]
    return RgbImage(np.clip(demosaic_plane(plane, raw.bayer_pattern), 0.0, 1.0))


def simple_isp(
    raw: RawFrame,
    wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0),
    gamma: float = 1.0,
) -> RgbImage:
    if len(wb_gains) != 3 or any(not g > 0 for g in wb_gains):
        raise ContractViolation(f"ホワイトバランスゲインは正の 3 値: {wb_gains}")
    if not gamma > 0:
        raise ContractViolation(f"gamma は正: {gamma}")
    rgb = demosaic_bilinear(raw).data * np.asarray(wb_gains, dtype=np.float64)
    rgb = np.clip(rgb, 0.0, 1.0)
    if gamma != 1.0:
        rgb = np.power(rgb, 1.0 / gamma)
    return RgbImage(rgb)
