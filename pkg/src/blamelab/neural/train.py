"""Adam, the learning-rate schedule, MLM pretraining and blame fine-tuning."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import ModelConfig, TrainConfig
from .errors import DivergenceError
from .model import classification_loss, init_params, mlm_loss
from .vocab import MASK, PAD, UNK, pad_batch

LogFn = Callable[[dict], None]


class Adam:
    def __init__(self, params: dict, b1=0.9, b2=0.999, eps=1e-8):
        self.b1, self.b2, self.eps = b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, p in params.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= (lr / c1) * m / (np.sqrt(v / c2) + self.eps)


def lr_at(step: int, total: int, tcfg: TrainConfig) -> float:
    """Learning rate for 1-based ``step`` out of ``total``."""
    base = tcfg.learning_rate
    if tcfg.scheduler == "constant" or total <= 0:
        return base
    warm = max(1, int(round(tcfg.warmup_frac * total)))
    if step <= warm:
        return base * step / warm
    return base * max(0.0, (total - step) / max(1, total - warm))


def clip_grads(grads: dict, max_norm: float) -> float:
    norm = math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
    if max_norm > 0 and norm > max_norm:
        s = np.float32(max_norm / (norm + 1e-12))
        for g in grads.values():
            g *= s
    return norm


def mlm_prepare(ids: np.ndarray, mask_rate: float, rng: np.random.Generator, vocab_size: int):
    """BERT-style corruption of non-PAD positions.

    Returns ``(corrupted, positions, targets)`` where ``positions`` is a
    boolean array of selected tokens and ``targets`` their original ids in
    row-major order.
    """
    if not 0.0 < mask_rate < 1.0:
        raise ValueError("mask_rate must lie in (0, 1)")
    ids = np.asarray(ids)
    real = ids != PAD
    positions = (rng.random(ids.shape) < mask_rate) & real
    roll = rng.random(ids.shape)
    random_ids = rng.integers(UNK + 1, vocab_size, size=ids.shape)
    corrupted = ids.copy()
    corrupted[positions & (roll < 0.8)] = MASK
    swap = positions & (roll >= 0.8) & (roll < 0.9)
    corrupted[swap] = random_ids[swap]
    return corrupted, positions, ids[positions]


@dataclass
class TrainResult:
    params: dict
    history: list = field(default_factory=list)  # one {epoch, split, loss, seconds} per epoch


def _streams(seed: int):
    shuffle, drop, corrupt = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(shuffle), np.random.default_rng(drop), np.random.default_rng(corrupt)


BUCKET_FACTOR = 8


def make_batches(lengths: Sequence[int], batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffled batches of similar-length programs to limit padding.

    The data is shuffled, cut into pools of ``BUCKET_FACTOR`` batches, each
    pool sorted by length and split, and finally the batch order is shuffled.
    """
    lengths = np.asarray(lengths)
    order = rng.permutation(len(lengths))
    pool = batch_size * BUCKET_FACTOR
    batches = []
    for start in range(0, len(order), pool):
        chunk = order[start : start + pool]
        chunk = chunk[np.argsort(lengths[chunk], kind="stable")]
        batches.extend(chunk[i : i + batch_size] for i in range(0, len(chunk), batch_size))
    return [batches[i] for i in rng.permutation(len(batches))]


def _check_finite(loss: float, epoch: int):
    if not math.isfinite(loss):
        raise DivergenceError(f"loss became non-finite in epoch {epoch}")


def _copy(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def pretrain_mlm(
    encoded: Sequence[np.ndarray],
    cfg: ModelConfig,
    tcfg: TrainConfig,
    init: Optional[dict] = None,
    log: Optional[LogFn] = None,
) -> TrainResult:
    """Masked-token pretraining over id sequences of unlabelled programs."""
    if not encoded:
        raise ValueError("pretraining corpus is empty")
    params = _copy(init) if init is not None else init_params(cfg, tcfg.seed)
    r_shuffle, r_drop, r_corrupt = _streams(tcfg.seed)
    n = len(encoded)
    lengths = [len(e) for e in encoded]
    per_epoch = math.ceil(n / tcfg.batch_size)
    total = per_epoch * tcfg.epochs
    opt = Adam(params)
    step = 0
    result = TrainResult(params)
    for epoch in range(1, tcfg.epochs + 1):
        t0 = time.perf_counter()
        losses = []
        for idx in make_batches(lengths, tcfg.batch_size, r_shuffle):
            ids, mask = pad_batch([encoded[i] for i in idx])
            corrupted, positions, targets = mlm_prepare(ids, tcfg.mask_rate, r_corrupt, cfg.vocab)
            step += 1
            if not positions.any():
                continue
            loss, grads = mlm_loss(params, cfg, corrupted, mask, positions, targets, r_drop)
            _check_finite(loss, epoch)
            clip_grads(grads, tcfg.clip_norm)
            opt.step(params, grads, lr_at(step, total, tcfg))
            losses.append(loss)
        rec = {"epoch": epoch, "split": "train", "loss": float(np.mean(losses)) if losses else 0.0,
               "seconds": round(time.perf_counter() - t0, 3)}
        result.history.append(rec)
        if log:
            log(rec)
    return result


def positive_weight(labels: Sequence[Sequence[int]]) -> float:
    """Negative-to-positive token ratio of a labelled corpus."""
    pos = sum(int(np.sum(l)) for l in labels)
    total = sum(len(l) for l in labels)
    return (total - pos) / pos if pos else 1.0


def finetune(
    encoded: Sequence[np.ndarray],
    labels: Sequence[Sequence[int]],
    cfg: ModelConfig,
    tcfg: TrainConfig,
    init: Optional[dict] = None,
    log: Optional[LogFn] = None,
) -> TrainResult:
    """Token-classification training; ``init=None`` starts from fresh weights."""
    if len(encoded) != len(labels):
        raise ValueError("every program needs a label vector")
    if not encoded:
        raise ValueError("fine-tuning corpus is empty")
    params = _copy(init) if init is not None else init_params(cfg, tcfg.seed)
    pw = positive_weight(labels)
    r_shuffle, r_drop, _ = _streams(tcfg.seed)
    n = len(encoded)
    lengths = [len(e) for e in encoded]
    per_epoch = math.ceil(n / tcfg.batch_size)
    total = per_epoch * tcfg.epochs
    opt = Adam(params)
    step = 0
    result = TrainResult(params)
    for epoch in range(1, tcfg.epochs + 1):
        t0 = time.perf_counter()
        losses = []
        for idx in make_batches(lengths, tcfg.batch_size, r_shuffle):
            ids, mask = pad_batch([encoded[i] for i in idx])
            y, _ = pad_batch([np.asarray(labels[i]) for i in idx])
            loss, grads = classification_loss(params, cfg, ids, mask, y, pw, r_drop)
            _check_finite(loss, epoch)
            step += 1
            clip_grads(grads, tcfg.clip_norm)
            opt.step(params, grads, lr_at(step, total, tcfg))
            losses.append(loss)
        rec = {"epoch": epoch, "split": "train", "loss": float(np.mean(losses)),
               "seconds": round(time.perf_counter() - t0, 3)}
        result.history.append(rec)
        if log:
            log(rec)
    return result
