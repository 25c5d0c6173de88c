from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any

from rich.console import Console, Group
from rich.panel import Panel
from rich.table import Table

from src.ald.training import ToyTrainReport


def ab_summary(with_dsl: ToyTrainReport, without: ToyTrainReport) -> dict[str, Any]:
    """A/B 比較の key=value (比は DSL あり / なし)"""
    out: dict[str, Any] = {}
    for prefix, r in (("dsl", with_dsl), ("baseline", without)):
        out |= {f"{prefix}.{k}": v for k, v in r.to_kv().items()}
    if 0 < without.feature_distance < math.inf:
        out["feature_distance_ratio"] = with_dsl.feature_distance / without.feature_distance
    if without.det_loss_low > 0:
        out["det_loss_low_ratio"] = with_dsl.det_loss_low / without.det_loss_low
    return out


def print_toytrain_rich(reports: Sequence[ToyTrainReport], console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title="Toy Training", show_lines=False)
    table.add_column("ALD", justify="center")
    table.add_column("DSL", justify="center")
    table.add_column("Steps", justify="right")
    table.add_column("Feature dist (rel)", justify="right")
    table.add_column("Feature dist (abs)", justify="right")
    table.add_column("Det loss (low)", justify="right")
    table.add_column("Det loss (well)", justify="right")
    table.add_column("Train loss", justify="right")
    table.add_column("Time [s]", justify="right")
    for r in reports:
        table.add_row(
            "on" if r.use_ald else "off",
            "on" if r.use_dsl else "off",
            str(r.steps),
            f"{r.feature_distance:.4g}",
            f"{r.feature_distance_abs:.4g}",
            f"{r.det_loss_low:.4f}",
            f"{r.det_loss_well:.4f}",
            "-" if r.final_train_loss is None else f"{r.final_train_loss:.4f}",
            f"{r.train_time:.1f}",
        )

    parts: list[Table | Panel] = [table]
    pairs = {(r.use_ald, r.use_dsl): r for r in reports}
    lines = []
    for use_ald in (True, False):
        a, b = pairs.get((use_ald, True)), pairs.get((use_ald, False))
        if a is None or b is None:
            continue
        s = ab_summary(a, b)
        if "feature_distance_ratio" in s:
            lines.append(
                f"ALD {'on' if use_ald else 'off'}: feature distance ratio (DSL / no DSL) = "
                f"{s['feature_distance_ratio']:.3f}"
            )
    if lines:
        parts.append(Panel("\n".join(lines), title="[b]DSL effect[/b]", border_style="cyan"))
    console.print(Group(*parts))
