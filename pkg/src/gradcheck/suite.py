"""登録済みの勾配検証ケースをまとめて実行する"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

from rich.console import Console
from rich.table import Table

import src.gradcheck.base as base
from src.domain.errors import ConfigError
from src.gradcheck.autoimport import auto_import_all

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = 20


@dataclass
class CaseResult:
    name: str
    summary: str
    max_rel_err: float = 0.0
    passed: bool = True
    worst: str | None = None
    worst_seed: int | None = None
    failure: str | None = None
    n_checked: int = 0


@dataclass
class SuiteReport:
    cases: list[CaseResult] = field(default_factory=list)
    eps: float = 1e-5
    tol: float = 1e-4
    seeds: list[int] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)


def run_suite(
    seeds: int | Sequence[int] = DEFAULT_SEEDS,
    eps: float = 1e-5,
    tol: float = 1e-4,
    mutate: str | None = None,
) -> SuiteReport:
    """各ケースを全 seed で実行し、ケースごとの最大相対誤差をまとめる。

    mutate にケース名を渡すと、そのケースの解析勾配を 1 要素だけずらす (失敗検出の確認用)。
    """
    base.case_registry.clear()
    auto_import_all(reload=True)
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    cases = base.all_cases()
    if mutate is not None and mutate not in {c.name for c in cases}:
        raise ConfigError(f"未知の勾配検証ケース: {mutate}")

    report = SuiteReport(eps=eps, tol=tol, seeds=seed_list)
    start = time.perf_counter()
    for case in cases:
        res = CaseResult(case.name, case.summary)
        for seed in seed_list:
            r = case.run(seed, eps, tol, mutate=case.name == mutate)
            res.n_checked += r.n_checked
            if r.max_rel_err >= res.max_rel_err:
                res.max_rel_err = r.max_rel_err
                res.worst = r.worst
                res.worst_seed = seed
            if not r.passed:
                res.passed = False
                res.failure = res.failure or r.failure
        logger.debug("%s: max_rel_err=%.3e", case.name, res.max_rel_err)
        report.cases.append(res)
    report.elapsed = time.perf_counter() - start
    logger.info(
        "gradcheck: %d cases x %d seeds in %.1f s", len(cases), len(seed_list), report.elapsed
    )
    return report


def print_suite_rich(report: SuiteReport, console: Console | None = None) -> None:
    console = console or Console()
    table = Table(
        title=f"Gradient Check (eps={report.eps:g}, tol={report.tol:g}, seeds={len(report.seeds)})"
    )
    table.add_column("Case", no_wrap=True)
    table.add_column("Summary", overflow="fold")
    table.add_column("Max rel err", justify="right")
    table.add_column("Worst", overflow="fold")
    table.add_column("Result", justify="center")
    for c in report.cases:
        worst = f"{c.worst} (seed {c.worst_seed})" if c.worst else "-"
        if c.failure:
            worst = f"{worst}: {c.failure}"
        table.add_row(
            c.name,
            c.summary,
            f"{c.max_rel_err:.2e}",
            worst,
            "[green]PASS[/]" if c.passed else "[bold red]FAIL[/]",
        )
    console.print(table)
    console.print(f"elapsed {report.elapsed:.1f} s")
