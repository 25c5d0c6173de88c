from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.domain.errors import ContractViolation, DimensionError

# (N, C, H, W) の float64 配列をテンソルとして扱う
Tensor = NDArray[np.float64]


def as_tensor(x: ArrayLike, *, ndim: int = 4, name: str = "tensor") -> Tensor:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionError(f"{name}: {ndim} 次元を期待しましたが shape={arr.shape}")
    return arr


def check_finite(x: NDArray[np.float64], name: str = "tensor") -> None:
    if not np.all(np.isfinite(x)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(x))[0])
        raise ContractViolation(f"{name}: 非有限値があります (index={idx})")


def check_same_shape(a: NDArray[np.float64], b: NDArray[np.float64], what: str) -> None:
    if a.shape != b.shape:
        axes = [i for i, (p, q) in enumerate(zip(a.shape, b.shape, strict=False)) if p != q]
        raise DimensionError(f"{what}: shape 不一致 {a.shape} vs {b.shape} (axes={axes})")
