"""暗所 RAW のノイズ合成

physics: ショット (Poisson) + 読み出し (Gaussian) + 行ノイズ + 量子化
gaussian_poisson: 信号依存の分散 a·s + b をもつ Gaussian
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import overload

import numpy as np
from numpy.typing import NDArray

from src.domain.config import NoiseConfig
from src.domain.errors import ContractViolation
from src.domain.types import NoiseKind, NoiseParams, RawFrame

logger = logging.getLogger(__name__)


def row_rng(seed: int, frame_index: int, row: int) -> np.random.Generator:
    # (seed, frame, row) ごとに独立したストリーム。並列実行でも切り出しでも結果は変わらない
    return np.random.default_rng(np.random.SeedSequence((seed, frame_index, row)))


def _noisy_row(
    rng: np.random.Generator, s: NDArray[np.float64], params: NoiseParams
) -> NDArray[np.float64]:
    width = s.shape[0]
    if params.kind is not NoiseKind.PHYSICS:
        std = np.sqrt(np.clip(params.gp_a * s + params.gp_b, 0.0, None))
        return s + rng.standard_normal(width) * std
    if params.K > 0:
        noisy = rng.poisson(np.clip(s, 0.0, None) / params.K).astype(np.float64) * params.K
    else:
        noisy = s.copy()
    if params.sigma_read > 0:
        noisy += rng.normal(0.0, params.sigma_read, size=width)
    if params.sigma_row > 0:
        # 1 行につき 1 回だけ引いて行方向に共有 (横縞)
        noisy += rng.normal(0.0, params.sigma_row)
    if params.quant_step > 0:
        q = params.quant_step
        noisy += rng.uniform(-q / 2, q / 2, size=width)
    return noisy


def synthesize(clean: RawFrame, params: NoiseParams, seed: int) -> RawFrame:
    """明所 RAW を ratio 倍に暗くしてセンサーノイズを加える"""
    if seed < 0:
        raise ContractViolation(f"seed は非負: {seed}")
    black = float(clean.black_level)
    s = (clean.data.astype(np.float64) - black) * params.ratio
    noisy = np.empty_like(s)
    for r in range(s.shape[0]):
        noisy[r] = _noisy_row(row_rng(seed, clean.frame_index, r), s[r], params)

    max_code = (1 << clean.bit_depth) - 1
    out = np.clip(np.rint(noisy + black), 0, max_code).astype(np.uint16)
    return replace(clean, data=out)


@overload
def model_variance(s: float, params: NoiseParams) -> float: ...
@overload
def model_variance(s: NDArray[np.float64], params: NoiseParams) -> NDArray[np.float64]: ...
def model_variance(
    s: float | NDArray[np.float64], params: NoiseParams
) -> float | NDArray[np.float64]:
    """信号 s [counts] に対する理論分散 [counts²]"""
    if np.any(np.asarray(s) < 0):
        raise ContractViolation("信号 s は非負である必要があります")
    if params.kind is NoiseKind.PHYSICS:
        return (
            params.K * s
            + params.sigma_read**2
            + params.sigma_row**2
            + params.quant_step**2 / 12.0
        )
    return params.gp_a * s + params.gp_b


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    if lo == hi:
        return lo
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def sample_params(
    seed: int,
    gain_range: tuple[float, float] | list[float],
    ratio_range: tuple[float, float] | list[float],
    base: NoiseConfig | None = None,
) -> NoiseParams:
    """学習データ拡張用に physics モデルのパラメータを引く。

    K と ratio は対数一様。sigma_read は K との対数線形関係 (傾き・切片・ばらつきは
    NoiseConfig の read_slope / read_intercept / read_jitter) から決める。
    """
    base = base or NoiseConfig()
    for name, (lo, hi) in (("gain_range", gain_range), ("ratio_range", ratio_range)):
        if not (lo > 0 and hi > 0):
            raise ContractViolation(f"{name} は正の範囲: [{lo}, {hi}]")
        if lo > hi:
            raise ContractViolation(f"{name} の上下が逆です: [{lo}, {hi}]")
    if ratio_range[1] > 1.0:
        raise ContractViolation(f"ratio_range の上限は 1 以下: {ratio_range[1]}")

    rng = np.random.default_rng(seed)
    k = _log_uniform(rng, float(gain_range[0]), float(gain_range[1]))
    log_read = base.read_slope * math.log(k) + base.read_intercept
    log_read += base.read_jitter * float(rng.standard_normal())
    ratio = _log_uniform(rng, float(ratio_range[0]), float(ratio_range[1]))
    params = NoiseParams(
        kind=NoiseKind.PHYSICS,
        K=k,
        sigma_read=math.exp(log_read),
        sigma_row=base.sigma_row,
        quant_step=base.quant_step,
        gp_a=base.gp_a,
        gp_b=base.gp_b,
        ratio=ratio,
    )
    logger.debug("sampled noise params seed=%d: %s", seed, params)
    return params


@dataclass(frozen=True)
class VarianceCheck:
    signal: float
    empirical: float
    model: float

    @property
    def rel_err(self) -> float:
        return abs(self.empirical - self.model) / self.model if self.model > 0 else math.inf

    def passed(self, tol: float) -> bool:
        return self.rel_err <= tol


def verify_variance(
    params: NoiseParams,
    seed: int,
    levels: tuple[float, ...] = (10.0, 100.0, 1000.0),
    size: int = 256,
    black_level: int = 240,
) -> list[VarianceCheck]:
    """一定値フレームにノイズを載せ、画素分散を model_variance と比べる (ratio は 1 に固定)"""
    p = replace(params, ratio=1.0)
    out: list[VarianceCheck] = []
    for k, s in enumerate(levels, start=1):
        code = black_level + s
        if not float(code).is_integer() or code > 4095 - 8 * math.sqrt(model_variance(s, p)):
            raise ContractViolation(f"検証用の信号レベルが不正です: s={s}")
        clean = RawFrame(
            data=np.full((size, size), int(code), dtype=np.uint16),
            bit_depth=12,
            black_level=black_level,
            white_level=4095,
            frame_index=k,
        )
        noisy = synthesize(clean, p, seed)
        emp = float(noisy.data.astype(np.float64).var(ddof=1))
        out.append(VarianceCheck(s, emp, float(model_variance(s, p))))
        logger.debug("variance check s=%g: empirical=%.4g model=%.4g", s, emp, out[-1].model)
    return out
