"""等速直線運動する物体の合成シーン (GT と検出)

物体は縦に分かれたレーンを水平に移動するので互いに重ならない。
検出は GT と同じボックスに、欠落 (連続欠落は max_gap − 1 フレームまで) と
スコアのゆらぎを加えたもの。最初と最後のフレームは欠落させない。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.domain.errors import ContractViolation
from src.domain.types import (
    AnnotationRecord,
    BBox,
    Detection,
    ObjectClass,
    SequenceMeta,
    TrackTable,
)

SCENE_CLASSES = (ObjectClass.PERSON, ObjectClass.CAR, ObjectClass.BICYCLE)


@dataclass
class Scene:
    meta: SequenceMeta
    gt: TrackTable
    detections: list[Detection]


def make_cv_scene(
    n_objects: int = 5,
    n_frames: int = 100,
    dropout: float = 0.1,
    seed: int = 0,
    *,
    max_gap: int = 20,
    width: int = 1920,
    height: int = 1200,
    score_mean: float = 0.85,
    score_noise: float = 0.05,
    box_noise: float = 0.0,
) -> Scene:
    if n_objects < 1 or n_frames < 2:
        raise ContractViolation(f"n_objects >= 1, n_frames >= 2: {n_objects}, {n_frames}")
    if not 0.0 <= dropout < 1.0:
        raise ContractViolation(f"dropout は [0,1): {dropout}")
    if max_gap < 2 and dropout > 0:
        raise ContractViolation("欠落させるには max_gap >= 2 が必要です")
    lane = height / n_objects
    if lane < 20:
        raise ContractViolation(f"レーン幅が狭すぎます: {lane:.1f}px")

    rng = np.random.default_rng(seed)
    gt: list[AnnotationRecord] = []
    dets: list[Detection] = []
    for k in range(n_objects):
        tid = k + 1
        class_id = int(SCENE_CLASSES[k % len(SCENE_CLASSES)])
        h = float(rng.uniform(0.4, 0.7) * lane)
        w = float(rng.uniform(0.3, 0.8) * h)
        speed = float(rng.uniform(1.0, min(6.0, (width - w) / n_frames)))
        vx = speed if rng.random() < 0.5 else -speed
        span = abs(vx) * (n_frames - 1)
        x0 = float(rng.uniform(0.0, width - w - span))
        if vx < 0:
            x0 += span
        y = k * lane + (lane - h) / 2

        run = 0
        for f in range(1, n_frames + 1):
            box = BBox(x0 + vx * (f - 1), y, w, h)
            gt.append(AnnotationRecord(f, tid, box, 1.0, class_id, 1.0))
            interior = 1 < f < n_frames
            if interior and run < max_gap - 1 and rng.random() < dropout:
                run += 1
                continue
            run = 0
            if box_noise > 0:
                jitter = rng.normal(0.0, box_noise, size=2)
                box = BBox(box.x + jitter[0], box.y + jitter[1], w, h)
            score = float(np.clip(rng.normal(score_mean, score_noise), 0.0, 1.0))
            dets.append(Detection(f, class_id, box, score))

    meta = SequenceMeta(name=f"cv-{seed}", fps=20.0, width=width, height=height, length=n_frames)
    dets.sort(key=lambda d: (d.frame, d.box.y))
    return Scene(meta, TrackTable(gt), dets)
