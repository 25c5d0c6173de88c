"""float64 配列のバイナリ入出力

レイアウト: [ヘッダ長 (uint64 LE, 8 バイト)] [TOML ヘッダ (UTF-8)] [float64 LE 本体]
ヘッダには shape と任意のメタデータを入れる。見た目特徴ファイルでは
frames / ids を持ち、本体は (N, D) の単位ベクトル列。
"""

from __future__ import annotations

import logging
import struct
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
import tomlkit
from numpy.typing import NDArray
from tomlkit.exceptions import ParseError as TomlParseError

from src.domain.errors import FormatError

logger = logging.getLogger(__name__)

_LEN = struct.Struct("<Q")

EmbeddingMap = dict[tuple[int, int], NDArray[np.float64]]


def write_blob(
    path: str | Path, array: NDArray[np.float64], meta: Mapping[str, Any] | None = None
) -> None:
    header = tomlkit.document()
    for k, v in (meta or {}).items():
        header.add(k, v)
    header.add("shape", list(array.shape))
    header.add("dtype", "<f8")
    head = tomlkit.dumps(header).encode("utf-8")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    try:
        p.write_bytes(_LEN.pack(len(head)) + head + np.asarray(array, dtype="<f8").tobytes())
    except OSError as e:
        raise FormatError(f"{p}: 書き込みに失敗しました: {e}") from e


def read_blob(path: str | Path) -> tuple[NDArray[np.float64], dict[str, Any]]:
    p = Path(path)
    try:
        buf = p.read_bytes()
    except OSError as e:
        raise FormatError(f"{p}: 読み込みに失敗しました: {e}") from e
    if len(buf) < _LEN.size:
        raise FormatError(f"{p}: ヘッダ長が読めません")
    (n,) = _LEN.unpack_from(buf)
    if _LEN.size + n > len(buf):
        raise FormatError(f"{p}: ヘッダ長 {n} がファイルサイズを超えています")
    try:
        meta = tomlkit.parse(buf[_LEN.size : _LEN.size + n].decode("utf-8")).unwrap()
    except (UnicodeDecodeError, TomlParseError) as e:
        raise FormatError(f"{p}: ヘッダが読めません: {e}") from e
    shape = tuple(int(s) for s in meta.get("shape", []))
    body = buf[_LEN.size + n :]
    if len(body) != 8 * int(np.prod(shape)):
        raise FormatError(f"{p}: 本体サイズ {len(body)} バイトが shape={shape} と合いません")
    array = np.frombuffer(body, dtype="<f8").reshape(shape).astype(np.float64)
    return array, meta


def write_embeddings(
    path: str | Path, embeddings: Mapping[tuple[int, int], NDArray[np.float64]]
) -> None:
    keys = sorted(embeddings)
    if not keys:
        write_blob(path, np.zeros((0, 0)), {"kind": "embeddings", "frames": [], "ids": []})
        return
    array = np.stack([embeddings[k] for k in keys])
    meta = {"kind": "embeddings", "frames": [f for f, _ in keys], "ids": [i for _, i in keys]}
    write_blob(path, array, meta)


def read_embeddings(path: str | Path) -> EmbeddingMap:
    array, meta = read_blob(path)
    frames, ids = meta.get("frames"), meta.get("ids")
    if frames is None or ids is None or len(frames) != len(ids):
        raise FormatError(f"{path}: frames / ids のヘッダがありません")
    if array.ndim != 2 or array.shape[0] != len(frames):
        raise FormatError(f"{path}: 行数 {array.shape[0]} と frames/ids の数が合いません")
    out: EmbeddingMap = {}
    for row, key in enumerate(zip(frames, ids, strict=True)):
        vec = array[row]
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise FormatError(f"{path}: (frame={key[0]}, id={key[1]}) がゼロベクトルです")
        if abs(norm - 1.0) > 1e-6:
            logger.warning("%s: (frame=%d, id=%d) が単位ベクトルでないため正規化します", path, *key)
            vec = vec / norm
        out[(int(key[0]), int(key[1]))] = vec
    return out


def write_params(path: str | Path, params: Mapping[str, NDArray[np.float64]]) -> None:
    """名前付きパラメータをまとめて 1 ファイルに保存する (本体は平坦化して連結)"""
    names = sorted(params)
    flat = np.concatenate([params[k].ravel() for k in names]) if names else np.zeros(0)
    meta = {
        "kind": "params",
        "names": names,
        "shapes": [list(params[k].shape) for k in names],
    }
    write_blob(path, flat, meta)


def read_params(path: str | Path) -> dict[str, NDArray[np.float64]]:
    flat, meta = read_blob(path)
    names, shapes = meta.get("names", []), meta.get("shapes", [])
    out: dict[str, NDArray[np.float64]] = {}
    offset = 0
    for name, shape in zip(names, shapes, strict=True):
        size = int(np.prod(shape))
        out[name] = flat[offset : offset + size].reshape(shape)
        offset += size
    if offset != flat.size:
        raise FormatError(f"{path}: shapes の合計 {offset} と本体 {flat.size} が合いません")
    return out
