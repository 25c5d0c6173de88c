# src/gradcheck/base_impl.py
from abc import ABC, abstractmethod
from collections.abc import Mapping

import numpy as np

from src.numerics.gradcheck import Array, GradReport

MUTATION = 1e-2  # --mutate で先頭要素に足すずれ


class GradCheckCase(ABC):
    name: str = "unnamed"
    summary: str = "no summary"

    @staticmethod
    def corrupt(analytic: Mapping[str, Array], mutate: bool) -> dict[str, Array]:
        """mutate のとき、最初の勾配の先頭要素だけずらしたコピーを返す"""
        out = {k: np.array(v, dtype=np.float64, copy=True) for k, v in analytic.items()}
        if mutate and out:
            first = next(iter(out.values()))
            first.flat[0] += MUTATION * max(1.0, abs(float(first.flat[0])))
        return out

    @abstractmethod
    def run(self, seed: int, eps: float, tol: float, mutate: bool = False) -> GradReport:
        """seed から入力形状と値を決めて grad_check を 1 回行う"""
        pass
