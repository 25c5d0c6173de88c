"""ToyNet の明所/暗所ペア学習 (DSL あり/なしの A/B 比較)"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from src.ald.data import PairedSet, make_paired_set
from src.ald.losses import loss_ds, loss_total, loss_tv
from src.ald.toynet import (
    FEATURE_LAYERS,
    ToyNet,
    bce_with_logits,
    toynet_backward,
    toynet_forward,
    toynet_init,
)
from src.domain.config import TrainConfig
from src.domain.errors import TrainingError
from src.domain.types import FusionMode, NoiseParams
from src.numerics.tensor import Tensor

logger = logging.getLogger(__name__)

# データ生成用のストリーム識別子
_TRAIN_STREAM = 1
_HOLDOUT_STREAM = 2


@dataclass
class ToyTrainReport:
    seed: int
    use_dsl: bool
    use_ald: bool
    steps: int
    feature_distance: float  # held-out の平均 ‖F_well − F_low‖₂ / ‖F_well‖₂
    feature_distance_abs: float  # held-out の平均 ‖F_well − F_low‖₂ / 要素数
    det_loss_low: float  # held-out 暗所入力の BCE
    det_loss_well: float
    final_train_loss: float | None
    train_time: float  # 秒
    snapshot: dict[str, Tensor] = field(default_factory=dict, repr=False)

    def to_kv(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "seed": self.seed,
            "use_dsl": self.use_dsl,
            "use_ald": self.use_ald,
            "steps": self.steps,
            "feature_distance": self.feature_distance,
            "feature_distance_abs": self.feature_distance_abs,
            "det_loss_low": self.det_loss_low,
            "det_loss_well": self.det_loss_well,
        }
        if self.final_train_loss is not None:
            out["final_train_loss"] = self.final_train_loss
        return out


def _stack_features(f: dict[str, Tensor], i: int) -> Tensor:
    return np.concatenate([f[k][i].ravel() for k in FEATURE_LAYERS])


def feature_distance(f_well: dict[str, Tensor], f_low: dict[str, Tensor]) -> float:
    """サンプルごとの ‖F_well − F_low‖₂ / ‖F_well‖₂ の平均

    特徴が消えている (F_well = 0) サンプルがあれば inf。
    """
    n = f_well[FEATURE_LAYERS[0]].shape[0]
    per_sample = []
    for i in range(n):
        fw = _stack_features(f_well, i)
        norm = float(np.linalg.norm(fw))
        if norm == 0.0:
            return math.inf
        per_sample.append(float(np.linalg.norm(fw - _stack_features(f_low, i))) / norm)
    return float(np.mean(per_sample))


def feature_distance_abs(f_well: dict[str, Tensor], f_low: dict[str, Tensor]) -> float:
    """サンプルごとの ‖F_well − F_low‖₂ / 要素数 の平均"""
    n = f_well[FEATURE_LAYERS[0]].shape[0]
    per_sample = []
    for i in range(n):
        diff = _stack_features(f_well, i) - _stack_features(f_low, i)
        per_sample.append(float(np.linalg.norm(diff)) / diff.size)
    return float(np.mean(per_sample))

@dataclass(frozen=True)
class HoldoutEval:
    feature_distance: float
    feature_distance_abs: float
    det_loss_low: float
    det_loss_well: float


def evaluate(net: ToyNet, holdout: PairedSet, label_smoothing: float = 0.0) -> HoldoutEval:
    logits_w, f_w, _ = toynet_forward(net, holdout.clean)
    logits_l, f_l, _ = toynet_forward(net, holdout.degraded)
    det_w, _ = bce_with_logits(logits_w, holdout.target, label_smoothing)
    det_l, _ = bce_with_logits(logits_l, holdout.target, label_smoothing)
    dist = feature_distance(f_w, f_l)
    if not math.isfinite(dist):
        logger.warning("held-out の明所特徴がすべて 0 です (ReLU が死んでいます)")
    return HoldoutEval(dist, feature_distance_abs(f_w, f_l), det_l, det_w)


def cosine_lr(step: int, steps: int, lr: float, lr_min: float) -> float:
    if steps <= 1:
        return lr
    return lr_min + 0.5 * (lr - lr_min) * (1.0 + math.cos(math.pi * step / steps))


def _train_step(
    net: ToyNet,
    xw: Tensor,
    xl: Tensor,
    y: Tensor,
    cfg: TrainConfig,
    use_dsl: bool,
    step: int,
) -> tuple[float, dict[str, Tensor]]:
    dsl = cfg.dsl()
    logits_w, f_w, cache_w = toynet_forward(net, xw)
    logits_l, f_l, cache_l = toynet_forward(net, xl)
    det_w, gz_w = bce_with_logits(logits_w, y, cfg.label_smoothing)
    det_l, gz_l = bce_with_logits(logits_l, y, cfg.label_smoothing)

    l_ds = l_tv = 0.0
    fg_well: dict[str, Tensor] = {}
    fg_low: dict[str, Tensor] = {}
    if use_dsl:
        layers = list(dsl.layers)
        l_ds, g_ds_low, g_ds_well = loss_ds(
            [f_w[k] for k in layers], [f_l[k] for k in layers], normalize=cfg.dsl_normalize
        )
        l_tv, g_tv = loss_tv([f_l[k] for k in layers], normalize=cfg.dsl_normalize)
        for i, k in enumerate(layers):
            fg_low[k] = dsl.beta * g_ds_low[i] + dsl.gamma * g_tv[i]
            if not cfg.detach_well:
                fg_well[k] = dsl.beta * g_ds_well[i]

    if not all(math.isfinite(v) for v in (det_w, det_l, l_ds, l_tv)):
        raise TrainingError(step, f"損失が非有限値になりました (det_w={det_w}, det_l={det_l})")
    total = loss_total(det_w, det_l, l_ds, l_tv, dsl)

    _, grads_w = toynet_backward(net, cache_w, gz_w, fg_well)
    _, grads_l = toynet_backward(net, cache_l, dsl.alpha * gz_l, fg_low)
    grads = {k: grads_w[k] + grads_l[k] for k in grads_w}
    return total, grads


def toy_train(
    train_set: PairedSet,
    holdout: PairedSet,
    cfg: TrainConfig,
    *,
    seed: int,
    use_dsl: bool | None = None,
    steps: int | None = None,
    lr: float | None = None,
) -> ToyTrainReport:
    use_dsl = cfg.use_dsl if use_dsl is None else use_dsl
    steps = cfg.steps if steps is None else steps
    lr = cfg.lr if lr is None else lr
    if steps < 0:
        raise TrainingError(0, f"steps は 0 以上: {steps}")

    s_init, s_batch = np.random.SeedSequence(seed).spawn(2)
    net = toynet_init(
        int(train_set.clean.shape[1]),
        cfg.channels,
        s_init,
        use_ald=cfg.use_ald,
        fusion=FusionMode(cfg.fusion),
    )
    params = net.params()
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    rng = np.random.default_rng(s_batch)
    batch_size = min(cfg.batch_size, len(train_set))

    start = time.time()
    final_loss: float | None = None
    for step in range(steps):
        idx = rng.choice(len(train_set), size=batch_size, replace=False)
        xw, xl, y = train_set.batch(idx)
        loss, grads = _train_step(net, xw, xl, y, cfg, use_dsl, step)

        for k, p in params.items():
            grads[k] = grads[k] + cfg.weight_decay * p
        norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if not math.isfinite(norm):
            raise TrainingError(step, "勾配が非有限値になりました")
        scale = cfg.clip_norm / norm if cfg.clip_norm > 0 and norm > cfg.clip_norm else 1.0

        lr_t = cosine_lr(step, steps, lr, cfg.lr_min)
        for k, p in params.items():
            velocity[k] = cfg.momentum * velocity[k] + scale * grads[k]
            p -= lr_t * velocity[k]
        net.touch()
        final_loss = loss
        if step % 100 == 0:
            logger.debug("step %d loss=%.5f lr=%.5f |g|=%.3f", step, loss, lr_t, norm)

    elapsed = time.time() - start
    ev = evaluate(net, holdout, cfg.label_smoothing)
    logger.info(
        "toy_train use_dsl=%s use_ald=%s steps=%d -> feature_distance=%.6g det_loss_low=%.5f",
        use_dsl,
        cfg.use_ald,
        steps,
        ev.feature_distance,
        ev.det_loss_low,
    )
    return ToyTrainReport(
        seed=seed,
        use_dsl=use_dsl,
        use_ald=cfg.use_ald,
        steps=steps,
        feature_distance=ev.feature_distance,
        feature_distance_abs=ev.feature_distance_abs,
        det_loss_low=ev.det_loss_low,
        det_loss_well=ev.det_loss_well,
        final_train_loss=final_loss,
        train_time=elapsed,
        snapshot={k: v.copy() for k, v in net.params().items()},
    )


def make_datasets(cfg: TrainConfig, noise: NoiseParams, seed: int) -> tuple[PairedSet, PairedSet]:
    train = make_paired_set(
        cfg.n_train, cfg.image_size, noise, np.random.SeedSequence((seed, _TRAIN_STREAM))
    )
    holdout = make_paired_set(
        cfg.n_holdout, cfg.image_size, noise, np.random.SeedSequence((seed, _HOLDOUT_STREAM))
    )
    return train, holdout


def run_ab(
    cfg: TrainConfig, noise: NoiseParams, seed: int
) -> tuple[ToyTrainReport, ToyTrainReport]:
    """同じデータ・初期値で (DSL あり, DSL なし) を学習する"""
    train, holdout = make_datasets(cfg, noise, seed)
    with_dsl = toy_train(train, holdout, cfg, seed=seed, use_dsl=True)
    without = toy_train(train, holdout, cfg, seed=seed, use_dsl=False)
    return with_dsl, without


def run_ablation(cfg: TrainConfig, noise: NoiseParams, seed: int) -> list[ToyTrainReport]:
    """ALD × DSL の 2×2 グリッド"""
    train, holdout = make_datasets(cfg, noise, seed)
    reports = []
    for use_ald in (False, True):
        sub = replace(cfg, use_ald=use_ald)
        for use_dsl in (False, True):
            reports.append(toy_train(train, holdout, sub, seed=seed, use_dsl=use_dsl))
    return reports
