"""実行設定 (RunConfig) の定義と TOML 読み込み・上書き・ハッシュ化

設定ファイルは TOML で、セクションは [noise] [tracker] [metrics] [train] [io] の 5 つ。
コマンドラインからは ``--tracker.max_age 40`` のようにドット区切りキーで上書きできる。
未知のセクション・キーは ConfigError で拒否する。
"""

from __future__ import annotations

import hashlib
import tomllib
import types
import typing
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

import tomlkit

from src.domain.errors import ConfigError
from src.domain.types import AggregationMode, FusionMode, NoiseKind, NoiseParams, ObjectClass

SECTIONS = ("noise", "tracker", "metrics", "train", "io")


def _alpha_grid() -> list[float]:
    # 0.05, 0.10, ..., 0.95 の 19 点
    return [round(0.05 * i, 2) for i in range(1, 20)]


@dataclass
class NoiseConfig:
    kind: str = NoiseKind.PHYSICS.value
    K: float = 1.0
    sigma_read: float = 2.0
    sigma_row: float = 0.5
    quant_step: float = 1.0
    gp_a: float = 1.0
    gp_b: float = 4.0
    ratio: float = 0.01
    # sample_params 用
    gain_range: list[float] = field(default_factory=lambda: [0.25, 4.0])
    ratio_range: list[float] = field(default_factory=lambda: [1 / 200, 1 / 50])
    # log(sigma_read) = slope * log(K) + intercept + jitter * N(0, 1)
    read_slope: float = 0.85
    read_intercept: float = 0.7
    read_jitter: float = 0.1

    def __post_init__(self) -> None:
        try:
            NoiseKind(self.kind)
        except ValueError as e:
            raise ConfigError(f"noise.kind が不正です: {self.kind!r}") from e
        for name in ("gain_range", "ratio_range"):
            if len(getattr(self, name)) != 2:
                raise ConfigError(f"noise.{name} は [lo, hi] の 2 要素で指定してください")

    def params(self) -> NoiseParams:
        return NoiseParams(
            kind=NoiseKind(self.kind),
            K=self.K,
            sigma_read=self.sigma_read,
            sigma_row=self.sigma_row,
            quant_step=self.quant_step,
            gp_a=self.gp_a,
            gp_b=self.gp_b,
            ratio=self.ratio,
        )


@dataclass(frozen=True)
class KalmanParams:
    """SORT 系の慣例どおり、位置・速度の標準偏差は高さ h に比例させる"""

    std_weight_position: float = 1 / 20
    std_weight_velocity: float = 1 / 160
    std_aspect: float = 1e-2
    std_aspect_velocity: float = 1e-5
    std_aspect_measurement: float = 1e-1
    # 観測ノイズ R 全体への倍率 (0 に近づけると観測をそのまま信じる)
    measurement_scale: float = 1.0


@dataclass
class TrackerConfig:
    tau_high: float = 0.6
    tau_low: float = 0.1
    iou_gate: float = 0.2
    iou_gate_low: float = 0.5
    max_age: int = 30
    min_hits: int = 3
    appearance_weight: float = 0.0
    ema_momentum: float = 0.9
    use_oru: bool = True
    use_ocm: bool = False
    ocm_weight: float = 0.2
    ocm_delta: int = 3
    interpolate: bool = True
    max_gap: int = 20
    fps: float = 20.0
    kf_std_weight_position: float = 1 / 20
    kf_std_weight_velocity: float = 1 / 160
    kf_measurement_scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau_low < self.tau_high <= 1.0:
            raise ConfigError(
                f"0 <= tau_low < tau_high <= 1 を満たしません: "
                f"tau_low={self.tau_low}, tau_high={self.tau_high}"
            )
        if self.max_gap < 0:
            raise ConfigError(f"tracker.max_gap は 0 以上: {self.max_gap}")
        if not 0.0 <= self.appearance_weight <= 1.0:
            raise ConfigError(f"tracker.appearance_weight は [0,1]: {self.appearance_weight}")
        if self.min_hits < 1 or self.max_age < 0:
            raise ConfigError("tracker.min_hits は 1 以上、tracker.max_age は 0 以上")

    def kalman(self) -> KalmanParams:
        return KalmanParams(
            std_weight_position=self.kf_std_weight_position,
            std_weight_velocity=self.kf_std_weight_velocity,
            measurement_scale=self.kf_measurement_scale,
        )


@dataclass
class MetricsConfig:
    alphas: list[float] = field(default_factory=_alpha_grid)
    iou_thr: float = 0.5
    aggregation: str = AggregationMode.DET_AVG.value
    assignment_backend: str = "hungarian"  # "hungarian" | "lp"
    gt_visibility_threshold: float = 0.0

    def __post_init__(self) -> None:
        try:
            AggregationMode(self.aggregation)
        except ValueError as e:
            raise ConfigError(f"metrics.aggregation が不正です: {self.aggregation!r}") from e
        if self.assignment_backend not in ("hungarian", "lp"):
            raise ConfigError(
                f"metrics.assignment_backend は hungarian / lp: {self.assignment_backend!r}"
            )
        if not self.alphas or any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ConfigError("metrics.alphas は (0,1) の値を 1 つ以上")


@dataclass(frozen=True)
class DSLConfig:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.01
    layers: tuple[str, ...] = ("stem", "ald")

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"DSL の重み {name} は非負: {getattr(self, name)}")


@dataclass
class TrainConfig:
    # 損失の重み (L_det_low, L_DS, L_TV)
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.01
    layers: list[str] = field(default_factory=lambda: ["stem", "ald"])
    use_dsl: bool = True
    use_ald: bool = True
    fusion: str = FusionMode.ADDITIVE.value
    detach_well: bool = False
    # L_DS / L_TV を層ごとの特徴エネルギーで割る (スケール不変)
    dsl_normalize: bool = True
    # 検出 BCE のターゲットを t(1 − ε) + ε/2 にする
    label_smoothing: float = 0.1
    steps: int = 500
    lr: float = 0.02
    lr_min: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 1e-4
    clip_norm: float = 1.0
    channels: int = 4
    batch_size: int = 4
    image_size: int = 16
    n_train: int = 32
    n_holdout: int = 8

    def __post_init__(self) -> None:
        try:
            FusionMode(self.fusion)
        except ValueError as e:
            raise ConfigError(f"train.fusion が不正です: {self.fusion!r}") from e
        unknown = set(self.layers) - {"stem", "ald"}
        if unknown:
            raise ConfigError(f"train.layers に未知の層: {sorted(unknown)}")
        if self.steps < 0:
            raise ConfigError(f"train.steps は 0 以上: {self.steps}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError(f"train.label_smoothing は [0,1): {self.label_smoothing}")
        if self.image_size < 8 or self.image_size % 2:
            raise ConfigError(f"train.image_size は 8 以上の偶数: {self.image_size}")
        self.dsl()

    def dsl(self) -> DSLConfig:
        return DSLConfig(self.alpha, self.beta, self.gamma, tuple(self.layers))


@dataclass
class IOConfig:
    gt_file: str = "gt/gt.txt"
    det_file: str = "det/det.txt"
    raw_dir: str = "raw"
    seqinfo: str = "seqinfo.ini"
    # det ファイルの class 欄が -1 のとき割り当てるクラス
    default_class: int = 1
    precision: int = 2

    def __post_init__(self) -> None:
        if self.default_class not in set(ObjectClass):
            raise ConfigError(f"io.default_class は 1..6: {self.default_class}")
        if self.precision < 0:
            raise ConfigError(f"io.precision は 0 以上: {self.precision}")


@dataclass
class RunConfig:
    seed: int | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    io: IOConfig = field(default_factory=IOConfig)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.seed is not None:
            out["seed"] = self.seed
        for name in SECTIONS:
            section = getattr(self, name)
            out[name] = {f.name: getattr(section, f.name) for f in fields(section)}
        return out

    def to_toml(self) -> str:
        return tomlkit.dumps(self.to_dict())

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_toml().encode("utf-8")).hexdigest()[:12]


# ---- 値の型変換 ----


def _coerce(value: Any, tp: Any, key: str) -> Any:
    """TOML 値またはコマンドライン文字列を tp に合わせて変換する"""
    origin = typing.get_origin(tp)
    if origin in (types.UnionType, typing.Union):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None or (isinstance(value, str) and value.lower() == "none"):
            return None
        return _coerce(value, args[0], key)
    if origin is list:
        (item_tp,) = typing.get_args(tp)
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, list):
            raise ConfigError(f"{key}: リストを期待しましたが {value!r}")
        return [_coerce(v, item_tp, key) for v in value]
    if tp is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "1", "yes", "on"):
            return True
        if isinstance(value, str) and value.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: bool を期待しましたが {value!r}")
    if tp is int:
        if isinstance(value, bool):
            raise ConfigError(f"{key}: int を期待しましたが {value!r}")
        try:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        except ValueError as e:
            raise ConfigError(f"{key}: int を期待しましたが {value!r}") from e
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(f"{key}: float を期待しましたが {value!r}")
        try:
            return float(value)
        except ValueError as e:
            raise ConfigError(f"{key}: float を期待しましたが {value!r}") from e
    if tp is str:
        return str(value)
    raise ConfigError(f"{key}: 未対応の型 {tp}")


def _update_section(section: Any, values: dict[str, Any], section_name: str) -> Any:
    hints = typing.get_type_hints(type(section))
    known = {f.name for f in fields(section)}
    changes: dict[str, Any] = {}
    for k, v in values.items():
        key = f"{section_name}.{k}"
        if k not in known:
            raise ConfigError(f"未知の設定キーです: {key}")
        changes[k] = _coerce(v, hints[k], key)
    return replace(section, **changes)


def merge_config(cfg: RunConfig, data: dict[str, Any]) -> RunConfig:
    """ネストした dict (TOML と同じ形) を cfg に上書きした新しい RunConfig を返す"""
    out = cfg
    for name, values in data.items():
        if name == "seed":
            out = replace(out, seed=_coerce(values, int | None, "seed"))
            continue
        if name not in SECTIONS:
            raise ConfigError(f"未知の設定セクションです: [{name}]")
        if not isinstance(values, dict):
            raise ConfigError(f"[{name}] はテーブルである必要があります")
        section = getattr(out, name)
        assert is_dataclass(section)
        out = replace(out, **{name: _update_section(section, values, name)})
    return out


def load_config(path: str | Path | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    with open(path, "rb") as f:
        try:
            data = tomllib.loads(f.read().decode("utf-8-sig"))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: TOML として読めません: {e}") from e
    return merge_config(cfg, data)


def apply_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """{"tracker.max_age": "40"} 形式の上書きを適用する"""
    nested: dict[str, Any] = {}
    for dotted, value in overrides.items():
        if dotted == "seed":
            nested["seed"] = value
            continue
        if "." not in dotted:
            raise ConfigError(f"上書きキーは section.key 形式で指定してください: {dotted}")
        section, key = dotted.split(".", 1)
        nested.setdefault(section, {})[key] = value
    return merge_config(cfg, nested)
