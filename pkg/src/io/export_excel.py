from __future__ import annotations

import math
from collections.abc import Sequence
from typing import cast

from openpyxl import Workbook
from openpyxl.cell.cell import Cell
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from openpyxl.worksheet.worksheet import Worksheet

from src.metrics.combine import HEADLINE, EvalResult, class_name

COUNT_KEYS = ("IDSW", "FP", "FN", "IDTP", "IDFP", "IDFN")


def _styles() -> tuple[Font, Alignment, Border, PatternFill]:
    bold = Font(bold=True)
    center = Alignment(horizontal="center", vertical="center", wrap_text=True)
    border = Border(
        left=Side(style="thin"),
        right=Side(style="thin"),
        top=Side(style="thin"),
        bottom=Side(style="thin"),
    )
    # 未定義 (NaN) の指標
    undefined_fill = PatternFill(fill_type="solid", start_color="FF9999", end_color="FF9999")
    return bold, center, border, undefined_fill


def _write_table(ws: Worksheet, header: list[str], rows: list[list[object]]) -> None:
    bold, center, border, undefined_fill = _styles()
    for j, name in enumerate(header, start=1):
        cell: Cell = ws.cell(row=1, column=j, value=name)
        cell.font = bold
        cell.alignment = center
        cell.border = border
        ws.column_dimensions[get_column_letter(j)].width = 14 if j == 1 else 10
    for i, row in enumerate(rows, start=2):
        for j, value in enumerate(row, start=1):
            if isinstance(value, float) and math.isnan(value):
                cell = ws.cell(row=i, column=j, value="n/a")
                cell.fill = undefined_fill
            else:
                cell = ws.cell(row=i, column=j, value=value)
                if isinstance(value, float):
                    cell.number_format = "0.0000"
            cell.alignment = center
            cell.border = border
    ws.freeze_panes = "B2"


def export_metrics_to_excel(*, results: Sequence[EvalResult], out_path: str) -> None:
    """主要指標 (集計モードごと) とクラス別内訳・α 別の値をシートに分けて保存する"""
    wb = Workbook()
    ws_like = wb.active
    if not isinstance(ws_like, Worksheet):
        ws_like = wb.create_sheet(title="metrics")
    ws: Worksheet = cast(Worksheet, ws_like)
    ws.title = "metrics"

    _write_table(
        ws,
        ["mode", *HEADLINE, *COUNT_KEYS],
        [
            [
                res.mode.value,
                *res.headline().values(),
                res.idsw,
                res.fp,
                res.fn,
                res.idtp,
                res.idfp,
                res.idfn,
            ]
            for res in results
        ],
    )

    if results and results[0].per_class:
        _write_table(
            wb.create_sheet(title="per_class"),
            ["class", "GT", *HEADLINE, "IDSW", "FP", "FN"],
            [
                [
                    f"{c}:{class_name(c)}",
                    sc.n_gt,
                    *sc.headline().values(),
                    sc.idsw,
                    sc.fp,
                    sc.fn,
                ]
                for c, sc in results[0].per_class.items()
            ],
        )

    for res in results:
        _write_table(
            wb.create_sheet(title=f"alpha_{res.mode.value}"),
            ["alpha", "HOTA", "DetA", "AssA", "LocA"],
            [
                [float(a), float(h), float(d), float(s), float(lo)]
                for a, h, d, s, lo in zip(
                    res.alphas,
                    res.hota_alpha,
                    res.deta_alpha,
                    res.assa_alpha,
                    res.loca_alpha,
                    strict=True,
                )
            ],
        )
    wb.save(out_path)
