"""key=value レポートと CSV ダンプの書き出し"""

from __future__ import annotations

import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import pandas as pd
import tomlkit

from src.domain.errors import FormatError


def _plain(value: Any) -> Any:
    if hasattr(value, "item"):  # numpy スカラー
        value = value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_kv(path: str | Path, values: Mapping[str, Any]) -> None:
    """フラットな TOML (key = value 行) として書き出す"""
    doc = tomlkit.document()
    for key, value in values.items():
        doc.add(key, _plain(value))
    try:
        Path(path).write_text(tomlkit.dumps(doc), encoding="utf-8")
    except OSError as e:
        raise FormatError(f"{path}: 書き込みに失敗しました: {e}") from e


def read_kv(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"{path}: 読み込みに失敗しました: {e}") from e
    return dict(tomlkit.parse(text).unwrap())


def write_csv(path: str | Path, frame: pd.DataFrame) -> None:
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise FormatError(f"{path}: 書き込みに失敗しました: {e}") from e
