"""中心差分による勾配検証"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.domain.errors import ContractViolation, DimensionError

Array = NDArray[np.float64]


@dataclass
class GradReport:
    max_rel_err: float
    passed: bool
    worst: str | None = None  # 最大誤差の位置 "name[i, j, ...]"
    failure: str | None = None  # 非有限値などで検証できなかった理由
    n_checked: int = 0


class _NonFinite(Exception):
    pass


def _loc(name: str, idx: tuple[int, ...]) -> str:
    return f"{name}[{', '.join(str(i) for i in idx)}]"


def grad_check(
    fn: Callable[..., Array | float],
    inputs: Mapping[str, Array],
    analytic: Mapping[str, Array],
    *,
    eps: float = 1e-5,
    tol: float = 1e-4,
    cotangent: Array | None = None,
) -> GradReport:
    """fn(**inputs) の出力をスカラー化した関数について解析勾配を検証する。

    スカラー化は既定で総和。cotangent を与えると Σ cotangent ⊙ fn(...) を使う
    (softmax のように総和の勾配が恒等的に 0 になる演算向け)。
    analytic に含まれる入力だけを摂動し、相対誤差
    |a − n| / max(|a|, |n|, 1e-8) の最大値を返す。
    """
    if not 0.0 < eps <= 1e-2:
        raise ContractViolation(f"eps は (0, 1e-2] の範囲: {eps}")

    values = {k: np.array(v, dtype=np.float64, copy=True) for k, v in inputs.items()}

    def scalar() -> float:
        out = np.asarray(fn(**values), dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise _NonFinite
        if cotangent is None:
            return float(out.sum())
        return float((out * cotangent).sum())

    try:
        scalar()
    except _NonFinite:
        return GradReport(max_rel_err=float("inf"), passed=False, failure="forward: 非有限値")

    max_err = 0.0
    worst: str | None = None
    n_checked = 0
    for name, grad in analytic.items():
        if name not in values:
            raise ContractViolation(f"解析勾配 {name} に対応する入力がありません")
        arr = values[name]
        if grad.shape != arr.shape:
            raise DimensionError(f"{name}: 解析勾配 shape {grad.shape} と入力 {arr.shape} が不一致")
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            try:
                arr[idx] = orig + eps
                fp = scalar()
                arr[idx] = orig - eps
                fm = scalar()
            except _NonFinite:
                arr[idx] = orig
                return GradReport(
                    max_rel_err=float("inf"),
                    passed=False,
                    worst=_loc(name, idx),
                    failure=f"{_loc(name, idx)} の摂動で非有限値",
                    n_checked=n_checked,
                )
            arr[idx] = orig
            num = (fp - fm) / (2.0 * eps)
            a = float(grad[idx])
            err = abs(a - num) / max(abs(a), abs(num), 1e-8)
            n_checked += 1
            if err > max_err:
                max_err = err
                worst = _loc(name, idx)
    return GradReport(
        max_rel_err=max_err, passed=max_err < tol, worst=worst, n_checked=n_checked
    )
