"""MOTChallenge 形式のテキスト入出力

gt:     frame,id,x,y,w,h,conf,class,visibility
det:    frame,-1,x,y,w,h,score,class,-1,-1[,emb_1,...,emb_D]
result: frame,id,x,y,w,h,conf,class,-1,-1

det の class 欄が -1 のときは default_class を使う。
det の 11 列目以降は見た目特徴として読み、単位ベクトルに正規化する。
w, h が正でない行は読み飛ばし、件数を警告する。
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from pathlib import Path

import numpy as np

from src.domain.errors import ContractViolation, FormatError, ParseError
from src.domain.types import AnnotationRecord, BBox, Detection, ObjectClass, TrackTable

logger = logging.getLogger(__name__)

GT_FIELDS = 9
DET_FIELDS = 10
UNKNOWN_CLASS = -1


def _lines(path: str | Path) -> Iterator[tuple[int, list[str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise FormatError(f"{path}: 読み込みに失敗しました: {e}") from e
    for line_no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield line_no, [f.strip() for f in s.split(",")]


def _num(path: str | Path, line_no: int, fields: list[str], idx: int, name: str) -> float:
    try:
        return float(fields[idx])
    except ValueError:
        msg = f"{name} が数値ではありません: {fields[idx]!r}"
        raise ParseError(str(path), line_no, msg) from None


def _int(path: str | Path, line_no: int, fields: list[str], idx: int, name: str) -> int:
    v = _num(path, line_no, fields, idx, name)
    if not v.is_integer():
        raise ParseError(str(path), line_no, f"{name} は整数である必要があります: {fields[idx]!r}")
    return int(v)


def _box(path: str | Path, line_no: int, fields: list[str]) -> BBox | None:
    x, y, w, h = (_num(path, line_no, fields, i, n) for i, n in zip(range(2, 6), "xywh"))
    if not (np.isfinite([x, y, w, h]).all()):
        raise ParseError(str(path), line_no, "座標に有限でない値があります")
    if w <= 0 or h <= 0:
        return None
    return BBox(x, y, w, h)


def _class(path: str | Path, line_no: int, fields: list[str]) -> int:
    class_id = _int(path, line_no, fields, 7, "class")
    if class_id != UNKNOWN_CLASS and class_id not in set(ObjectClass):
        raise ParseError(str(path), line_no, f"class は 1..6 か -1: {class_id}")
    return class_id


def _frame(path: str | Path, line_no: int, fields: list[str]) -> int:
    frame = _int(path, line_no, fields, 0, "frame")
    if frame < 1:
        raise ParseError(str(path), line_no, f"frame は 1 以上: {frame}")
    return frame


def _report_rejected(path: str | Path, rejected: list[int]) -> None:
    if rejected:
        head = ", ".join(map(str, rejected[:10]))
        logger.warning(
            "%s: w/h が正でない %d 行を除外しました (行: %s%s)",
            path,
            len(rejected),
            head,
            " ..." if len(rejected) > 10 else "",
        )


def _parse_table(path: str | Path, n_fields: tuple[int, ...], kind: str) -> TrackTable:
    records: list[AnnotationRecord] = []
    seen: dict[tuple[int, int], int] = {}
    rejected: list[int] = []
    for line_no, fields in _lines(path):
        if len(fields) not in n_fields:
            raise ParseError(
                str(path), line_no, f"{kind} 行は {n_fields[0]} 列です (実際: {len(fields)} 列)"
            )
        frame = _frame(path, line_no, fields)
        tid = _int(path, line_no, fields, 1, "id")
        box = _box(path, line_no, fields)
        if box is None:
            rejected.append(line_no)
            continue
        conf = _num(path, line_no, fields, 6, "conf")
        class_id = _class(path, line_no, fields)
        visibility = _num(path, line_no, fields, 8, "visibility")
        if kind == "gt" and not 0.0 <= visibility <= 1.0:
            raise ParseError(str(path), line_no, f"visibility は [0,1]: {visibility}")
        if kind != "gt":
            visibility = 1.0
        if tid >= 0:
            if (frame, tid) in seen:
                raise ParseError(
                    str(path),
                    line_no,
                    f"(frame={frame}, id={tid}) が {seen[(frame, tid)]} 行目と重複しています",
                )
            seen[(frame, tid)] = line_no
        records.append(AnnotationRecord(frame, tid, box, conf, class_id, visibility))
    _report_rejected(path, rejected)
    return TrackTable(records)


def parse_gt(path: str | Path) -> TrackTable:
    return _parse_table(path, (GT_FIELDS,), "gt")


def parse_result(path: str | Path) -> TrackTable:
    return _parse_table(path, (DET_FIELDS,), "result")


def parse_det(path: str | Path, default_class: int = 1) -> list[Detection]:
    if default_class not in set(ObjectClass):
        raise ContractViolation(f"default_class は 1..6: {default_class}")
    dets: list[tuple[int, int, Detection]] = []
    rejected: list[int] = []
    for line_no, fields in _lines(path):
        if len(fields) < DET_FIELDS:
            raise ParseError(
                str(path), line_no, f"det 行は {DET_FIELDS} 列以上です (実際: {len(fields)} 列)"
            )
        frame = _frame(path, line_no, fields)
        box = _box(path, line_no, fields)
        if box is None:
            rejected.append(line_no)
            continue
        score = _num(path, line_no, fields, 6, "score")
        class_id = _class(path, line_no, fields)
        if class_id == UNKNOWN_CLASS:
            class_id = default_class
        embedding = None
        if len(fields) > DET_FIELDS:
            vec = np.array(
                [
                    _num(path, line_no, fields, i, "embedding")
                    for i in range(DET_FIELDS, len(fields))
                ]
            )
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise ParseError(str(path), line_no, "embedding がゼロベクトルです")
            embedding = vec / norm
        try:
            det = Detection(frame, class_id, box, score, embedding)
        except ContractViolation as e:
            raise ParseError(str(path), line_no, str(e)) from e
        dets.append((frame, line_no, det))
    _report_rejected(path, rejected)
    return [d for _, _, d in sorted(dets, key=lambda t: (t[0], t[1]))]


def _fmt(v: float, precision: int) -> str:
    return f"{v:.{precision}f}"


def _write_lines(path: str | Path, lines: Iterable[str]) -> None:
    body = "".join(f"{line}\n" for line in lines)
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(body, encoding="utf-8")
    except OSError as e:
        raise FormatError(f"{path}: 書き込みに失敗しました: {e}") from e


def write_result(table: TrackTable, path: str | Path, precision: int = 2) -> None:
    """(frame, id) 昇順で結果ファイルを書く。class 欄にはトラックのクラスを入れる"""

    def line(r: AnnotationRecord) -> str:
        coords = ",".join(_fmt(v, precision) for v in r.box.to_tlwh())
        return f"{r.frame},{r.id},{coords},{_fmt(r.conf, precision)},{r.class_id},-1,-1"

    _write_lines(path, (line(r) for r in table))


def write_gt(table: TrackTable, path: str | Path, precision: int = 2) -> None:
    def line(r: AnnotationRecord) -> str:
        coords = ",".join(_fmt(v, precision) for v in r.box.to_tlwh())
        return (
            f"{r.frame},{r.id},{coords},{_fmt(r.conf, precision)},{r.class_id},"
            f"{_fmt(r.visibility, precision)}"
        )

    _write_lines(path, (line(r) for r in table))


def write_det(dets: Iterable[Detection], path: str | Path, precision: int = 2) -> None:
    def line(d: Detection) -> str:
        coords = ",".join(_fmt(v, precision) for v in d.box.to_tlwh())
        out = f"{d.frame},-1,{coords},{_fmt(d.score, precision)},{d.class_id},-1,-1"
        if d.embedding is not None:
            out += "," + ",".join(repr(float(v)) for v in d.embedding)
        return out

    _write_lines(path, (line(d) for d in sorted(dets, key=lambda d: d.frame)))
