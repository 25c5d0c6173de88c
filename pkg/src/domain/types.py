from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np
from numpy.typing import NDArray

from src.domain.errors import ContractViolation, FormatError

FloatArray = NDArray[np.float64]


class ObjectClass(IntEnum):
    # 注釈ファイル上の class id (1 始まり)
    PERSON = 1
    BICYCLE = 2
    CAR = 3
    MOTORCYCLE = 4
    BUS = 5
    TRUCK = 6


class BayerPattern(str, Enum):
    RGGB = "RGGB"
    BGGR = "BGGR"
    GRBG = "GRBG"
    GBRG = "GBRG"


class NoiseKind(str, Enum):
    GAUSSIAN_POISSON = "gaussian_poisson"
    PHYSICS = "physics"


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"
    REMOVED = "removed"


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"
    REAL = "real"


class FusionMode(str, Enum):
    ADDITIVE = "additive"  # y = orig + w * low
    CONVEX = "convex"  # y = (1 - w) * orig + w * low


class AggregationMode(str, Enum):
    CLASS_AVG = "class_avg"
    DET_AVG = "det_avg"


@dataclass(frozen=True, slots=True)
class BBox:
    """左上 (x, y) と幅・高さ [px]"""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ContractViolation(
                f"BBox の w, h は正である必要があります: w={self.w}, h={self.h}"
            )

    @property
    def cx(self) -> float:
        return self.x + self.w / 2

    @property
    def cy(self) -> float:
        return self.y + self.h / 2

    def to_xyah(self) -> FloatArray:
        return np.array([self.cx, self.cy, self.w / self.h, self.h], dtype=np.float64)

    def to_xyxy(self) -> FloatArray:
        return np.array([self.x, self.y, self.x + self.w, self.y + self.h], dtype=np.float64)

    def to_tlwh(self) -> FloatArray:
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)

    @classmethod
    def from_xyah(cls, xyah: Iterable[float]) -> BBox:
        cx, cy, a, h = (float(v) for v in xyah)
        w = a * h
        return cls(cx - w / 2, cy - h / 2, w, h)


@dataclass(frozen=True, slots=True)
class Detection:
    frame: int
    class_id: int
    box: BBox
    score: float
    embedding: FloatArray | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ContractViolation(f"score は [0,1] の範囲: {self.score}")
        if self.embedding is not None:
            norm = float(np.linalg.norm(self.embedding))
            if abs(norm - 1.0) > 1e-6:
                raise ContractViolation(f"embedding は単位ベクトルである必要があります: |e|={norm}")


@dataclass(frozen=True, slots=True)
class RawFrame:
    """単板 Bayer モザイク。data は (height, width) の uint16"""

    data: NDArray[np.uint16]
    bit_depth: int = 12
    bayer_pattern: BayerPattern = BayerPattern.RGGB
    black_level: int = 240
    white_level: int = 4095
    frame_index: int = 1
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.bit_depth not in (8, 10, 12):
            raise FormatError(f"未対応のビット深度: {self.bit_depth}")
        if self.data.ndim != 2:
            raise FormatError(f"RAW データは 2 次元である必要があります: shape={self.data.shape}")
        h, w = self.data.shape
        if h % 2 or w % 2:
            raise FormatError(f"RAW の幅・高さは偶数である必要があります: {w}x{h}")
        max_code = (1 << self.bit_depth) - 1
        if not 0 <= self.black_level < self.white_level <= max_code:
            raise FormatError(
                f"black/white level が不正: black={self.black_level}, "
                f"white={self.white_level}, max={max_code}"
            )
        if self.data.size and int(self.data.max()) > max_code:
            raise FormatError(f"{self.bit_depth}bit の上限 {max_code} を超える画素があります")

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True, slots=True)
class RgbImage:
    """(height, width, 3) の [0,1] 実数画像"""

    data: FloatArray

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise FormatError(f"RgbImage は (H, W, 3) である必要があります: {self.data.shape}")

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True, slots=True)
class NoiseParams:
    kind: NoiseKind = NoiseKind.PHYSICS
    K: float = 1.0  # システムゲイン [counts/electron]
    sigma_read: float = 2.0  # [counts]
    sigma_row: float = 0.5  # [counts]
    quant_step: float = 1.0  # [counts]
    gp_a: float = 1.0
    gp_b: float = 4.0
    ratio: float = 0.01

    def __post_init__(self) -> None:
        for name in ("K", "sigma_read", "sigma_row", "quant_step", "gp_a", "gp_b"):
            if getattr(self, name) < 0:
                raise ContractViolation(f"NoiseParams.{name} は非負: {getattr(self, name)}")
        if not 0.0 < self.ratio <= 1.0:
            raise ContractViolation(f"NoiseParams.ratio は (0,1]: {self.ratio}")


@dataclass(frozen=True, slots=True)
class AnnotationRecord:
    frame: int
    id: int  # 生検出は -1
    box: BBox
    conf: float = 1.0
    class_id: int = -1
    visibility: float = 1.0

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ContractViolation(f"frame は 1 以上: {self.frame}")


@dataclass(frozen=True, slots=True)
class SequenceMeta:
    name: str
    fps: float = 20.0
    width: int = 1920
    height: int = 1200
    length: int = 1
    split: Split = Split.TRAIN

    def __post_init__(self) -> None:
        if self.length < 1:
            raise FormatError(f"seqLength は 1 以上: {self.length}")


@dataclass
class TrackTable:
    """GT / 予測テーブル。フレームごとの (id, class, box, conf, visibility) 行"""

    records: list[AnnotationRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[tuple[int, int]] = set()
        for r in self.records:
            if r.id < 0:
                continue
            key = (r.frame, r.id)
            if key in seen:
                raise ContractViolation(f"(frame, id) が重複しています: {key}")
            seen.add(key)
        self.records.sort(key=lambda r: (r.frame, r.id))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[AnnotationRecord]:
        return iter(self.records)

    def frames(self) -> list[int]:
        return sorted({r.frame for r in self.records})

    def by_frame(self) -> dict[int, list[AnnotationRecord]]:
        out: dict[int, list[AnnotationRecord]] = defaultdict(list)
        for r in self.records:
            out[r.frame].append(r)
        return dict(out)

    def by_id(self) -> dict[int, list[AnnotationRecord]]:
        out: dict[int, list[AnnotationRecord]] = defaultdict(list)
        for r in self.records:
            out[r.id].append(r)
        return dict(out)

    def ids(self) -> list[int]:
        return sorted({r.id for r in self.records})

    def class_ids(self) -> list[int]:
        return sorted({r.class_id for r in self.records})

    def filter_class(self, class_id: int) -> TrackTable:
        return TrackTable([r for r in self.records if r.class_id == class_id])

    def filter_visibility(self, threshold: float) -> TrackTable:
        if threshold <= 0:
            return TrackTable(list(self.records))
        return TrackTable([r for r in self.records if r.visibility >= threshold])
