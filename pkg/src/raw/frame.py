from __future__ import annotations

from dataclasses import replace
from typing import overload

import numpy as np

from src.domain.errors import ContractViolation
from src.domain.types import RawFrame, RgbImage
from src.numerics.tensor import Tensor


def normalize(raw: RawFrame) -> Tensor:
    """(v − black) / (white − black) を [0,1] にクランプして (1, 1, H, W) で返す"""
    span = float(raw.white_level - raw.black_level)
    x = (raw.data.astype(np.float64) - raw.black_level) / span
    return np.clip(x, 0.0, 1.0)[None, None]


def requantize(raw: RawFrame, target_bit_depth: int) -> RawFrame:
    """ビット深度を下げる。ハードウェアのビットシフトと同じく切り捨て"""
    if target_bit_depth > raw.bit_depth:
        raise ContractViolation(
            f"ビット深度を上げることはできません: {raw.bit_depth} -> {target_bit_depth}"
        )
    shift = raw.bit_depth - target_bit_depth
    if shift == 0:
        return raw
    return replace(
        raw,
        data=(raw.data >> shift).astype(np.uint16),
        bit_depth=target_bit_depth,
        black_level=raw.black_level >> shift,
        white_level=raw.white_level >> shift,
    )


@overload
def exposure_scale(x: RgbImage, ratio: float) -> RgbImage: ...
@overload
def exposure_scale(x: Tensor, ratio: float) -> Tensor: ...
def exposure_scale(x: RgbImage | Tensor, ratio: float) -> RgbImage | Tensor:
    """露出倍率を掛けて [0,1] にクランプする (暗所画像の明るさ合わせ)"""
    if not ratio > 0:
        raise ContractViolation(f"ratio は正: {ratio}")
    if isinstance(x, RgbImage):
        return RgbImage(np.clip(x.data * ratio, 0.0, 1.0))
    return np.clip(np.asarray(x, dtype=np.float64) * ratio, 0.0, 1.0)
