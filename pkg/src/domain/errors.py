from __future__ import annotations

from typing import Any


class DimensionError(ValueError):
    """テンソル形状・次元の不整合"""


class ContractViolation(ValueError):
    """事前条件・事後条件違反"""


class StaleCacheError(ContractViolation):
    """forward のキャッシュが別パラメータのもの"""


class FormatError(ValueError):
    """ファイル形式・フレーム不変条件の違反"""


class ParseError(FormatError):
    def __init__(self, path: str, line_no: int, message: str) -> None:
        self.path = path
        self.line_no = line_no
        self.message = message
        super().__init__(f"{path}:{line_no}行目: {message}")

    # --jobs のワーカーから親プロセスへ送れるように
    def __reduce__(self) -> tuple[Any, ...]:
        return (type(self), (self.path, self.line_no, self.message))


class ConfigError(ValueError):
    """未知のキーや型の合わない設定値"""


class TrainingError(RuntimeError):
    def __init__(self, step: int, message: str) -> None:
        self.step = step
        self.message = message
        super().__init__(f"step {step}: {message}")

    def __reduce__(self) -> tuple[Any, ...]:
        return (type(self), (self.step, self.message))


class NumericalError(RuntimeError):
    """数値的に解けない(特異行列など)"""


class MetricUndefinedError(RuntimeError):
    """GT が空などで指標が定義できない"""
