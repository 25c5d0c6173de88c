"""線形割当問題のソルバー

- hungarian: ポテンシャル付き最短増加路 (O(n³))。長方形は 0 コストでパディング
- solve_assignment_lp: pulp (CBC) による LP 定式化。結果の突き合わせ用

コストの +inf は禁止ペア。許可ペアでの最大マッチングのうち総コスト最小のものを返す。
"""

from __future__ import annotations

import time
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from typing import Any, Literal

import numpy as np
import pulp
from numpy.typing import ArrayLike, NDArray

from src.domain.errors import ContractViolation

Backend = Literal["hungarian", "lp"]


@dataclass
class AssignmentResult:
    status: str
    pairs: list[tuple[int, int]]  # (row, col) を row 昇順
    total_cost: float
    backend: str
    solve_time: float  # 秒

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _validate(cost: ArrayLike) -> NDArray[np.float64]:
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ContractViolation(f"コスト行列は 2 次元: shape={c.shape}")
    if np.isnan(c).any() or np.isneginf(c).any():
        raise ContractViolation("コスト行列に NaN / -inf は使えません")
    return c


def _big_m(c: NDArray[np.float64], allowed: NDArray[np.bool_]) -> tuple[NDArray[np.float64], float]:
    """禁止ペアを大きな有限値に置き換えた非負行列を返す"""
    finite = c[allowed]
    shift = float(finite.min())
    span = float(finite.max()) - shift
    n = max(c.shape)
    big = (span + 1.0) * (n + 1)
    work = np.where(allowed, c - shift, big)
    return work, big


def _hungarian_square(a: NDArray[np.float64]) -> NDArray[np.intp]:
    """正方行列の最小割当。row -> col の配列を返す"""
    n = a.shape[0]
    inf = float("inf")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.intp)  # p[j]: 列 j に割り当てた行 (1 始まり, 0 は未割当)
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            upd = free & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            masked = np.where(free, minv[1:], inf)
            # 同値なら最小の列番号
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.empty(n, dtype=np.intp)
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col


def hungarian(cost: ArrayLike) -> AssignmentResult:
    start = time.time()
    c = _validate(cost)
    rows, cols = c.shape
    allowed = np.isfinite(c)
    if rows == 0 or cols == 0 or not allowed.any():
        return AssignmentResult("Optimal", [], 0.0, "hungarian", time.time() - start)

    work, big = _big_m(c, allowed)
    n = max(rows, cols)
    square = np.zeros((n, n))
    square[:rows, :cols] = work
    row_to_col = _hungarian_square(square)

    pairs = [
        (r, int(row_to_col[r]))
        for r in range(rows)
        if row_to_col[r] < cols and allowed[r, row_to_col[r]]
    ]
    total = float(sum(c[r, k] for r, k in pairs))
    return AssignmentResult("Optimal", pairs, total, "hungarian", time.time() - start)


def solve_assignment_lp(cost: ArrayLike, solver: pulp.LpSolver | None = None) -> AssignmentResult:
    start = time.time()
    c = _validate(cost)
    rows, cols = c.shape
    allowed = np.isfinite(c)
    if rows == 0 or cols == 0 or not allowed.any():
        return AssignmentResult("Optimal", [], 0.0, "lp", time.time() - start)

    work, big = _big_m(c, allowed)
    model = pulp.LpProblem("assignment", pulp.LpMinimize)
    x = {
        (r, k): pulp.LpVariable(f"x_{r}_{k}", cat=pulp.LpBinary)
        for r in range(rows)
        for k in range(cols)
        if allowed[r, k]
    }
    # 1 ペア増やすごとに -big が効くので、まず本数最大、次にコスト最小
    model += pulp.lpSum((float(work[r, k]) - big) * var for (r, k), var in x.items())
    for r in range(rows):
        row_vars = [var for (rr, _), var in x.items() if rr == r]
        if row_vars:
            model += pulp.lpSum(row_vars) <= 1, f"row_{r}"
    for k in range(cols):
        col_vars = [var for (_, kk), var in x.items() if kk == k]
        if col_vars:
            model += pulp.lpSum(col_vars) <= 1, f"col_{k}"

    if solver is None:
        solver = pulp.PULP_CBC_CMD(msg=False)
    status_code = model.solve(solver)
    status = pulp.LpStatus.get(status_code, str(status_code))
    pairs = sorted(key for key, var in x.items() if round(pulp.value(var) or 0) == 1)
    total = float(sum(c[r, k] for r, k in pairs))
    return AssignmentResult(status, pairs, total, "lp", time.time() - start)


def solve_assignment(cost: ArrayLike, backend: Backend | str = "hungarian") -> AssignmentResult:
    if backend == "hungarian":
        return hungarian(cost)
    if backend == "lp":
        return solve_assignment_lp(cost)
    raise ContractViolation(f"未知の割当バックエンド: {backend}")


def matched_rows(pairs: Sequence[tuple[int, int]]) -> set[int]:
    return {r for r, _ in pairs}


def matched_cols(pairs: Sequence[tuple[int, int]]) -> set[int]:
    return {k for _, k in pairs}
