from __future__ import annotations

import math
from collections.abc import Sequence

import pandas as pd
from rich.console import Console, Group
from rich.panel import Panel
from rich.table import Table

from src.metrics.combine import HEADLINE, EvalResult, class_name


def _fmt(v: float) -> str:
    return "n/a" if math.isnan(v) else f"{100 * v:.2f}"


def per_class_frame(res: EvalResult) -> pd.DataFrame:
    rows = []
    for c, sc in res.per_class.items():
        rows.append(
            {
                "class_id": c,
                "class": class_name(c),
                "n_gt": sc.n_gt,
                **sc.headline(),
                "IDSW": sc.idsw,
                "FP": sc.fp,
                "FN": sc.fn,
            }
        )
    return pd.DataFrame(rows)


def alpha_frame(res: EvalResult) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "alpha": res.alphas,
            "HOTA": res.hota_alpha,
            "DetA": res.deta_alpha,
            "AssA": res.assa_alpha,
            "LocA": res.loca_alpha,
        }
    )


def print_eval_rich(results: Sequence[EvalResult], console: Console | None = None) -> None:
    """集計モードごとの主要指標とクラス別の内訳を表示する"""
    console = console or Console()
    if not results:
        console.print("[yellow]評価結果がありません。[/]")
        return

    head = Table(title="Tracking Metrics", show_lines=False)
    head.add_column("Mode", no_wrap=True)
    for k in HEADLINE:
        head.add_column(k, justify="right")
    for k in ("IDSW", "FP", "FN"):
        head.add_column(k, justify="right")
    for res in results:
        head.add_row(
            res.mode.value,
            *(_fmt(v) for v in res.headline().values()),
            str(res.idsw),
            str(res.fp),
            str(res.fn),
        )
    parts: list[Table | Panel] = [head]

    first = results[0]
    if first.per_class:
        detail = Table(title="Per Class", show_lines=False)
        detail.add_column("Class", no_wrap=True)
        detail.add_column("GT", justify="right")
        for k in HEADLINE:
            detail.add_column(k, justify="right")
        for c, sc in first.per_class.items():
            detail.add_row(
                f"{c}:{class_name(c)}", str(sc.n_gt), *(_fmt(v) for v in sc.headline().values())
            )
        parts.append(detail)

    notes = [*first.warnings, *(f"flag: {f}" for f in first.flags)]
    if notes:
        parts.append(Panel("\n".join(notes), title="[b]Notes[/b]", border_style="yellow"))
    console.print(Group(*parts))
