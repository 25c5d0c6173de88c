"""シーケンスディレクトリの読み込み

<seq>/
  seqinfo.ini    key=value 行 ([Sequence] などの見出し行は無視)
  gt/gt.txt      任意
  det/det.txt    任意
  raw/000001.raw16 (+ .toml サイドカー)  任意
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from src.domain.config import IOConfig
from src.domain.errors import FormatError
from src.domain.types import Detection, SequenceMeta, Split, TrackTable
from src.io.mot_format import parse_det, parse_gt
from src.io.raw_io import RAW_SUFFIX

logger = logging.getLogger(__name__)

# seqinfo のキー (MOTChallenge 表記も受け付ける) -> SequenceMeta のフィールド
_KEYS = {
    "name": "name",
    "fps": "fps",
    "framerate": "fps",
    "width": "width",
    "imwidth": "width",
    "height": "height",
    "imheight": "height",
    "length": "length",
    "seqlength": "length",
    "split": "split",
}


@dataclass
class SequenceData:
    root: Path
    meta: SequenceMeta
    gt: TrackTable | None = None
    det: list[Detection] | None = None
    raw_frames: dict[int, Path] = field(default_factory=dict)
    missing_raw: list[int] = field(default_factory=list)


def parse_seqinfo(path: str | Path) -> SequenceMeta:
    p = Path(path)
    if not p.is_file():
        raise FormatError(f"{p}: seqinfo がありません")
    values: dict[str, str] = {}
    for line_no, line in enumerate(p.read_text(encoding="utf-8-sig").splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;[":
            continue
        if "=" not in s:
            raise FormatError(f"{p}:{line_no}行目: key=value 形式ではありません: {s!r}")
        key, value = (t.strip() for t in s.split("=", 1))
        if key.lower() in _KEYS:
            values[_KEYS[key.lower()]] = value

    if "name" not in values:
        values["name"] = p.parent.name
    if "length" not in values:
        raise FormatError(f"{p}: seqLength (length) がありません")
    try:
        return SequenceMeta(
            name=values["name"],
            fps=float(values.get("fps", 20)),
            width=int(values.get("width", 1920)),
            height=int(values.get("height", 1200)),
            length=int(values["length"]),
            split=Split(values.get("split", Split.TRAIN.value).lower()),
        )
    except ValueError as e:
        raise FormatError(f"{p}: seqinfo の値が不正です: {e}") from e


def write_seqinfo(meta: SequenceMeta, path: str | Path) -> None:
    lines = [
        "[Sequence]",
        f"name={meta.name}",
        f"frameRate={meta.fps:g}",
        f"seqLength={meta.length}",
        f"imWidth={meta.width}",
        f"imHeight={meta.height}",
        f"split={meta.split.value}",
    ]
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")


def list_raw_frames(raw_dir: Path) -> dict[int, Path]:
    if not raw_dir.is_dir():
        return {}
    out: dict[int, Path] = {}
    for f in sorted(raw_dir.glob(f"*{RAW_SUFFIX}")):
        try:
            out[int(f.stem)] = f
        except ValueError:
            logger.warning("%s: フレーム番号として読めないファイル名です", f)
    return out


def load_sequence(seq_dir: str | Path, cfg: IOConfig | None = None) -> SequenceData:
    cfg = cfg or IOConfig()
    root = Path(seq_dir)
    meta = parse_seqinfo(root / cfg.seqinfo)
    data = SequenceData(root=root, meta=meta)

    gt_path = root / cfg.gt_file
    if gt_path.is_file():
        data.gt = parse_gt(gt_path)
    det_path = root / cfg.det_file
    if det_path.is_file():
        data.det = parse_det(det_path, cfg.default_class)

    data.raw_frames = list_raw_frames(root / cfg.raw_dir)
    if data.raw_frames:
        last = max(data.raw_frames)
        data.missing_raw = [i for i in range(1, last + 1) if i not in data.raw_frames]
        if data.missing_raw:
            logger.warning(
                "%s: RAW フレームの番号が欠けています: %s", root, data.missing_raw
            )
    logger.info(
        "loaded %s: gt=%s det=%s raw=%d",
        meta.name,
        "yes" if data.gt is not None else "no",
        "yes" if data.det is not None else "no",
        len(data.raw_frames),
    )
    return data
