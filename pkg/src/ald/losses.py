"""劣化抑制学習 (DSL) の損失

- loss_ds: 明所・暗所特徴の二乗誤差和 (正規化なし)
- loss_tv: 暗所特徴の縦横一次差分の二乗和
- loss_total: L_det_well + α L_det_low + β L_DS + γ L_TV

normalize=True のときは層ごとに特徴エネルギー (L_DS は明所側 ΣF_well²、
L_TV は ΣF_low²) で割る。特徴全体の定数倍に対して不変になる。
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from src.domain.config import DSLConfig
from src.domain.errors import ContractViolation, DimensionError
from src.numerics.tensor import Tensor

# 正規化の分母が 0 になるのを避ける
ENERGY_EPS = 1e-12


def loss_ds(
    f_well: Sequence[Tensor], f_low: Sequence[Tensor], *, normalize: bool = False
) -> tuple[float, list[Tensor], list[Tensor]]:
    """(L_DS, dL/dF_low のリスト, dL/dF_well のリスト)"""
    if len(f_well) != len(f_low):
        raise DimensionError(f"特徴リストの長さが不一致: well={len(f_well)}, low={len(f_low)}")
    total = 0.0
    g_low: list[Tensor] = []
    g_well: list[Tensor] = []
    for layer, (fw, fl) in enumerate(zip(f_well, f_low, strict=True)):
        if fw.shape != fl.shape:
            raise DimensionError(f"層 {layer}: shape 不一致 {fw.shape} vs {fl.shape}")
        diff = fl - fw
        sq = float(np.sum(diff * diff))
        if not normalize:
            total += sq
            g_low.append(2.0 * diff)
            g_well.append(-2.0 * diff)
            continue
        energy = float(np.sum(fw * fw)) + ENERGY_EPS
        total += sq / energy
        g_low.append(2.0 * diff / energy)
        g_well.append(-2.0 * diff / energy - 2.0 * fw * sq / (energy * energy))
    return total, g_low, g_well


def loss_tv(f_low: Sequence[Tensor], *, normalize: bool = False) -> tuple[float, list[Tensor]]:
    total = 0.0
    grads: list[Tensor] = []
    for layer, f in enumerate(f_low):
        if f.ndim != 4 or f.shape[2] < 2 or f.shape[3] < 2:
            raise DimensionError(f"層 {layer}: TV には H, W >= 2 が必要です: shape={f.shape}")
        d_row = f[:, :, 1:, :] - f[:, :, :-1, :]
        d_col = f[:, :, :, 1:] - f[:, :, :, :-1]
        tv = float(np.sum(d_row * d_row) + np.sum(d_col * d_col))
        g = np.zeros_like(f)
        g[:, :, 1:, :] += 2.0 * d_row
        g[:, :, :-1, :] -= 2.0 * d_row
        g[:, :, :, 1:] += 2.0 * d_col
        g[:, :, :, :-1] -= 2.0 * d_col
        if normalize:
            energy = float(np.sum(f * f)) + ENERGY_EPS
            g = g / energy - 2.0 * f * tv / (energy * energy)
            tv /= energy
        total += tv
        grads.append(g)
    return total, grads


def loss_total(
    l_det_well: float, l_det_low: float, l_ds: float, l_tv: float, cfg: DSLConfig
) -> float:
    terms = {"L_det_well": l_det_well, "L_det_low": l_det_low, "L_DS": l_ds, "L_TV": l_tv}
    for name, v in terms.items():
        if not math.isfinite(v):
            raise ContractViolation(f"{name} が有限値ではありません: {v}")
        if v < 0:
            raise ContractViolation(f"{name} は非負である必要があります: {v}")
    return l_det_well + cfg.alpha * l_det_low + cfg.beta * l_ds + cfg.gamma * l_tv
