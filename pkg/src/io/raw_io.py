"""RAW フレームと PNG プレビューの入出力

RAW は little-endian uint16 の生データ (.raw16) と、形状・ビット深度などを持つ
TOML サイドカー (.toml) の組で保存する。
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import tomlkit
from PIL import Image

from src.domain.errors import FormatError
from src.domain.types import BayerPattern, RawFrame, RgbImage

RAW_SUFFIX = ".raw16"
SIDECAR_SUFFIX = ".toml"


def raw_path(raw_dir: str | Path, frame_index: int) -> Path:
    return Path(raw_dir) / f"{frame_index:06d}{RAW_SUFFIX}"


def write_raw(frame: RawFrame, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    header = tomlkit.document()
    header.add("height", frame.height)
    header.add("width", frame.width)
    header.add("bit_depth", frame.bit_depth)
    header.add("bayer_pattern", frame.bayer_pattern.value)
    header.add("black_level", frame.black_level)
    header.add("white_level", frame.white_level)
    header.add("frame_index", frame.frame_index)
    header.add("timestamp", frame.timestamp)
    try:
        p.write_bytes(frame.data.astype("<u2").tobytes())
        p.with_suffix(SIDECAR_SUFFIX).write_text(tomlkit.dumps(header), encoding="utf-8")
    except OSError as e:
        raise FormatError(f"{p}: 書き込みに失敗しました: {e}") from e


def read_raw(path: str | Path) -> RawFrame:
    p = Path(path)
    sidecar = p.with_suffix(SIDECAR_SUFFIX)
    try:
        header = tomlkit.parse(sidecar.read_text(encoding="utf-8")).unwrap()
        buf = p.read_bytes()
    except OSError as e:
        raise FormatError(f"{p}: 読み込みに失敗しました: {e}") from e
    try:
        h, w = int(header["height"]), int(header["width"])
        expected = 2 * h * w
        if len(buf) != expected:
            raise FormatError(f"{p}: サイズが {len(buf)} バイトですが {expected} バイトが必要です")
        data = np.frombuffer(buf, dtype="<u2").reshape(h, w).astype(np.uint16)
        return RawFrame(
            data=data,
            bit_depth=int(header["bit_depth"]),
            bayer_pattern=BayerPattern(header["bayer_pattern"]),
            black_level=int(header["black_level"]),
            white_level=int(header["white_level"]),
            frame_index=int(header["frame_index"]),
            timestamp=float(header["timestamp"]),
        )
    except KeyError as e:
        raise FormatError(f"{sidecar}: 必須キー {e} がありません") from e


def save_png(image: RgbImage, path: str | Path) -> None:
    """[0,1] の RGB を 8bit PNG として保存する"""
    data = np.rint(np.clip(image.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    try:
        Image.fromarray(data).save(p, format="PNG")
    except OSError as e:
        raise FormatError(f"{p}: PNG の保存に失敗しました: {e}") from e
