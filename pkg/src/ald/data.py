"""トイ学習用のペアデータ (明所 / 暗所 + ノイズ / ターゲットマスク)"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.domain.types import BayerPattern, NoiseParams, RawFrame
from src.noise.model import synthesize
from src.numerics.tensor import Tensor
from src.raw.frame import exposure_scale, normalize

BLACK_LEVEL = 240
WHITE_LEVEL = 4095


@dataclass(frozen=True)
class PairedSet:
    clean: Tensor  # (n, 1, H, W) 明所
    degraded: Tensor  # (n, 1, H, W) 暗所 + ノイズを露出補正したもの
    target: Tensor  # (n, 1, H/2, W/2) 矩形ブロブのマスク

    def __len__(self) -> int:
        return int(self.clean.shape[0])

    def batch(self, idx: NDArray[np.intp]) -> tuple[Tensor, Tensor, Tensor]:
        return self.clean[idx], self.degraded[idx], self.target[idx]


def render_blob_raw(
    size: int, rng: np.random.Generator, frame_index: int = 1
) -> tuple[RawFrame, NDArray[np.float64]]:
    """暗い背景に 1〜3 個の明るい矩形を置いた 12bit RGGB モザイクとマスク"""
    level = np.full((size, size), rng.uniform(0.02, 0.1))
    mask = np.zeros((size, size))
    for _ in range(int(rng.integers(1, 4))):
        h, w = (int(v) for v in rng.integers(3, size // 2 + 1, size=2))
        y, x = (int(v) for v in rng.integers(0, size - 2, size=2))
        level[y : y + h, x : x + w] = rng.uniform(0.5, 0.9)
        mask[y : y + h, x : x + w] = 1.0
    data = np.rint(BLACK_LEVEL + level * (WHITE_LEVEL - BLACK_LEVEL)).astype(np.uint16)
    raw = RawFrame(
        data=data,
        bit_depth=12,
        bayer_pattern=BayerPattern.RGGB,
        black_level=BLACK_LEVEL,
        white_level=WHITE_LEVEL,
        frame_index=frame_index,
    )
    return raw, mask


def make_paired_set(
    n: int, size: int, noise: NoiseParams, seed: int | np.random.SeedSequence
) -> PairedSet:
    rng = np.random.default_rng(seed)
    clean, degraded, target = [], [], []
    for i in range(n):
        raw, mask = render_blob_raw(size, rng, frame_index=i + 1)
        noisy = synthesize(raw, noise, seed=int(rng.integers(2**31)))
        clean.append(normalize(raw)[0])
        degraded.append(exposure_scale(normalize(noisy), 1.0 / noise.ratio)[0])
        half = mask.reshape(size // 2, 2, size // 2, 2).mean(axis=(1, 3))
        target.append((half >= 0.5).astype(np.float64)[None])
    return PairedSet(np.stack(clean), np.stack(degraded), np.stack(target))
