"""等速モデルのカルマンフィルタ

状態は (cx, cy, a, h, vcx, vcy, va, vh)、a = w / h 。
観測は (cx, cy, a, h)。プロセスノイズ・観測ノイズの標準偏差は高さ h に比例する。
更新は Joseph 形式で共分散の対称・半正定値を保つ。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from src.domain.config import KalmanParams
from src.domain.errors import NumericalError
from src.domain.types import BBox

logger = logging.getLogger(__name__)

NDIM = 4
REGULARIZATION = 1e-9

# F (遷移行列) と H (観測行列)
_MOTION = np.eye(2 * NDIM)
_MOTION[:NDIM, NDIM:] = np.eye(NDIM)
_UPDATE = np.eye(NDIM, 2 * NDIM)


@dataclass(frozen=True)
class KalmanState:
    mean: NDArray[np.float64]  # (8,)
    covariance: NDArray[np.float64]  # (8, 8)

    def to_bbox(self) -> BBox:
        return BBox.from_xyah(self.mean[:NDIM])

    @property
    def velocity(self) -> NDArray[np.float64]:
        return self.mean[NDIM:]


def _symmetrize(p: NDArray[np.float64]) -> NDArray[np.float64]:
    return 0.5 * (p + p.T)


def kf_init(box: BBox, params: KalmanParams | None = None) -> KalmanState:
    params = params or KalmanParams()
    measurement = box.to_xyah()
    mean = np.r_[measurement, np.zeros(NDIM)]
    h = measurement[3]
    std = [
        2 * params.std_weight_position * h,
        2 * params.std_weight_position * h,
        params.std_aspect,
        2 * params.std_weight_position * h,
        10 * params.std_weight_velocity * h,
        10 * params.std_weight_velocity * h,
        params.std_aspect_velocity,
        10 * params.std_weight_velocity * h,
    ]
    return KalmanState(mean, np.diag(np.square(std)))


def process_noise(mean: NDArray[np.float64], params: KalmanParams) -> NDArray[np.float64]:
    h = mean[3]
    std_pos = [
        params.std_weight_position * h,
        params.std_weight_position * h,
        params.std_aspect,
        params.std_weight_position * h,
    ]
    std_vel = [
        params.std_weight_velocity * h,
        params.std_weight_velocity * h,
        params.std_aspect_velocity,
        params.std_weight_velocity * h,
    ]
    return np.diag(np.square(np.r_[std_pos, std_vel]))


def measurement_noise(mean: NDArray[np.float64], params: KalmanParams) -> NDArray[np.float64]:
    h = mean[3]
    std = np.array(
        [
            params.std_weight_position * h,
            params.std_weight_position * h,
            params.std_aspect_measurement,
            params.std_weight_position * h,
        ]
    )
    return np.diag(np.square(params.measurement_scale * std))


def kf_predict(state: KalmanState, params: KalmanParams | None = None) -> KalmanState:
    """1 フレーム先を予測する。

    縦横比・高さが 0 以下になる速度は 0 に落としてから進める (縮み続けるロスト軌跡)。
    """
    params = params or KalmanParams()
    mean = state.mean.copy()
    for k in (2, 3):
        if mean[k] + mean[k + NDIM] <= 0:
            mean[k + NDIM] = 0.0
    cov = _MOTION @ state.covariance @ _MOTION.T + process_noise(mean, params)
    return KalmanState(_MOTION @ mean, _symmetrize(cov))


def _cholesky(s: NDArray[np.float64]) -> tuple[NDArray[np.float64], bool]:
    try:
        return scipy.linalg.cho_factor(s, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        logger.warning(
            "イノベーション共分散が正定値でないため %.0e·I で正則化します", REGULARIZATION
        )
    try:
        return scipy.linalg.cho_factor(
            s + REGULARIZATION * np.eye(s.shape[0]), lower=True, check_finite=False
        )
    except np.linalg.LinAlgError as e:
        raise NumericalError("正則化後もイノベーション共分散が特異です") from e


def kf_update(state: KalmanState, box: BBox, params: KalmanParams | None = None) -> KalmanState:
    params = params or KalmanParams()
    z = box.to_xyah()
    r = measurement_noise(state.mean, params)
    p = state.covariance
    s = _symmetrize(_UPDATE @ p @ _UPDATE.T + r)
    factor = _cholesky(s)
    # K = P Hᵀ S⁻¹
    gain = scipy.linalg.cho_solve(factor, (p @ _UPDATE.T).T, check_finite=False).T
    innovation = z - _UPDATE @ state.mean
    mean = state.mean + gain @ innovation
    i_kh = np.eye(2 * NDIM) - gain @ _UPDATE
    cov = i_kh @ p @ i_kh.T + gain @ r @ gain.T
    return KalmanState(mean, _symmetrize(cov))
