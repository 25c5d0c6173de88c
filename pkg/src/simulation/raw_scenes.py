from __future__ import annotations

import numpy as np

from src.domain.types import BayerPattern, RawFrame
from src.simulation.scenes import Scene

BLACK_LEVEL = 240
WHITE_LEVEL = 4095


def render_raw_sequence(
    scene: Scene,
    *,
    downscale: int = 4,
    background: float = 0.05,
    seed: int = 0,
    pattern: BayerPattern = BayerPattern.RGGB,
) -> list[RawFrame]:
    """GT ボックスを明るい矩形として 12bit Bayer モザイクに描く (明所の元画像)"""
    h = (scene.meta.height // downscale) // 2 * 2
    w = (scene.meta.width // downscale) // 2 * 2
    rng = np.random.default_rng(seed)
    levels = {tid: float(rng.uniform(0.4, 0.9)) for tid in scene.gt.ids()}
    frames: list[RawFrame] = []
    by_frame = scene.gt.by_frame()
    for f in range(1, scene.meta.length + 1):
        level = np.full((h, w), background)
        for r in by_frame.get(f, []):
            x0, y0, x1, y1 = (int(round(v / downscale)) for v in r.box.to_xyxy())
            level[max(y0, 0) : max(y1, 0), max(x0, 0) : max(x1, 0)] = levels[r.id]
        data = np.rint(BLACK_LEVEL + level * (WHITE_LEVEL - BLACK_LEVEL)).astype(np.uint16)
        frames.append(
            RawFrame(
                data=data,
                bit_depth=12,
                bayer_pattern=pattern,
                black_level=BLACK_LEVEL,
                white_level=WHITE_LEVEL,
                frame_index=f,
                timestamp=(f - 1) / scene.meta.fps,
            )
        )
    return frames
