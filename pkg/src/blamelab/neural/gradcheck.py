"""Finite-difference gradient checks for primitives and whole losses.

Checks run in float64: the parameters are upcast, every primitive follows
its input dtype, and central differences use step ``h``. The error of a
tensor is normwise over the sampled entries,
``|a - n| / max(|a| + |n|, tiny)``, so near-zero entries cannot dominate.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .. import kernels
from . import layers as F
from .config import ModelConfig
from .errors import GradCheckFailure

TOLERANCE = 1e-3
_TINY = 1e-12

LossFn = Callable[[dict], tuple[float, dict]]


def grad_check(fn: LossFn, params: dict, seed: int = 0, samples: int = 6, h: float = 1e-3, tol: float = TOLERANCE) -> float:
    """Max relative error over all tensors; raises ``GradCheckFailure`` above ``tol``."""
    rng = np.random.default_rng(seed)
    p64 = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    _, grads = fn(p64)
    worst = 0.0
    for name in sorted(p64):
        g = np.asarray(grads[name], dtype=np.float64)
        flat = p64[name].reshape(-1)
        idx = rng.choice(flat.size, size=min(samples, flat.size), replace=False)
        num = np.empty(len(idx))
        for j, k in enumerate(idx):
            old = flat[k]
            flat[k] = old + h
            up, _ = fn(p64)
            flat[k] = old - h
            down, _ = fn(p64)
            flat[k] = old
            num[j] = (up - down) / (2 * h)
        ana = g.reshape(-1)[idx]
        err = np.linalg.norm(ana - num) / max(np.linalg.norm(ana) + np.linalg.norm(num), _TINY)
        worst = max(worst, float(err))
        if err > tol:
            raise GradCheckFailure(f"{name}: relative error {err:.3e} > {tol:g}")
    return worst


# -- primitive instances ---------------------------------------------------------
# Each builder returns (loss_fn, params) where the loss is a random linear
# functional of the primitive's output.


def _proj(rng, shape):
    return rng.standard_normal(shape)


def _linear(rng):
    r = _proj(rng, (2, 3, 5))
    x = rng.standard_normal((2, 3, 4))

    def fn(p):
        y, c = F.linear(p["x"], p["w"], p["b"])
        dx, dw, db = F.linear_backward(r, c)
        return float((y * r).sum()), {"x": dx, "w": dw, "b": db}

    return fn, {"x": x, "w": rng.standard_normal((4, 5)), "b": rng.standard_normal(5)}


def _layer_norm(rng):
    r = _proj(rng, (3, 6))

    def fn(p):
        y, c = F.layer_norm(p["x"], p["g"], p["b"])
        dx, dg, db = F.layer_norm_backward(r, c)
        return float((y * r).sum()), {"x": dx, "g": dg, "b": db}

    return fn, {"x": rng.standard_normal((3, 6)), "g": rng.standard_normal(6), "b": rng.standard_normal(6)}


def _gelu(rng):
    r = _proj(rng, (4, 5))

    def fn(p):
        y, c = F.gelu(p["x"])
        return float((y * r).sum()), {"x": F.gelu_backward(r, c)}

    return fn, {"x": rng.standard_normal((4, 5)) * 2}


def _softmax(rng):
    r = _proj(rng, (3, 7))

    def fn(p):
        y = F.softmax(p["x"])
        return float((y * r).sum()), {"x": F.softmax_backward(r, y)}

    return fn, {"x": rng.standard_normal((3, 7))}


def _attention(rng):
    bsz, t, h, heads = 2, 4, 8, 2
    r = _proj(rng, (bsz, t, h))
    mask = np.array([[1, 1, 1, 1], [1, 1, 1, 0]], dtype=np.int8)

    def fn(p):
        y, c = F.attention(p["x"], p["w_qkv"], p["b_qkv"], p["w_o"], p["b_o"], mask, heads)
        dx, dwq, dbq, dwo, dbo = F.attention_backward(r, c)
        return float((y * r).sum()), {"x": dx, "w_qkv": dwq, "b_qkv": dbq, "w_o": dwo, "b_o": dbo}

    return fn, {
        "x": rng.standard_normal((bsz, t, h)),
        "w_qkv": rng.standard_normal((h, 3 * h)) * 0.5,
        "b_qkv": rng.standard_normal(3 * h) * 0.1,
        "w_o": rng.standard_normal((h, h)) * 0.5,
        "b_o": rng.standard_normal(h) * 0.1,
    }


def _embed(rng):
    ids = rng.integers(0, 6, size=(2, 5))
    r = _proj(rng, (2, 5, 3))

    def fn(p):
        y, c = F.embed(p["table"], ids)
        return float((y * r).sum()), {"table": F.embed_backward(r, c)}

    return fn, {"table": rng.standard_normal((6, 3))}


def _bce(rng):
    y = (rng.random((3, 5)) < 0.3).astype(np.float64)
    w = rng.random((3, 5)) + 0.5

    def fn(p):
        loss, dz = F.weighted_bce_with_logits(p["z"], y, w)
        return float(loss), {"z": dz}

    return fn, {"z": rng.standard_normal((3, 5)) * 2}


def _cross_entropy(rng):
    targets = rng.integers(0, 9, size=6)

    def fn(p):
        loss, g = F.softmax_cross_entropy(p["logits"], targets)
        return float(loss), {"logits": g}

    return fn, {"logits": rng.standard_normal((6, 9))}


def _lstm_cell(rng):
    from .bilstm import _back_direction, _run_direction

    bsz, t, hd = 2, 3, 4
    mask = np.array([[1, 1, 1], [1, 1, 0]], dtype=np.int8)
    r = _proj(rng, (bsz, t, hd))

    def fn(p):
        out, steps = _run_direction(p["xw"], p["w_h"], mask, reverse=False)
        dxw, dwh = _back_direction(r, p["w_h"], mask, steps)
        return float((out * r).sum()), {"xw": dxw, "w_h": dwh}

    return fn, {"xw": rng.standard_normal((bsz, t, 4 * hd)), "w_h": rng.standard_normal((hd, 4 * hd)) * 0.5}


def _probe_loss(rng):
    target = rng.integers(1, 5, size=(5, 5)).astype(np.float64)
    target = target + target.T
    np.fill_diagonal(target, 0.0)

    def fn(p):
        loss, g = kernels.probe_loss_grad(p["z"], target)
        return float(loss), {"z": g}

    return fn, {"z": rng.standard_normal((5, 3))}


PRIMITIVES = {
    "linear": _linear,
    "layer_norm": _layer_norm,
    "gelu": _gelu,
    "softmax": _softmax,
    "attention": _attention,
    "embed": _embed,
    "weighted_bce": _bce,
    "softmax_cross_entropy": _cross_entropy,
    "lstm": _lstm_cell,
    "probe_loss": _probe_loss,
}


def check_primitive(name: str, seed: int = 0) -> float:
    fn, params = PRIMITIVES[name](np.random.default_rng(seed))
    return grad_check(fn, params, seed=seed)


def check_model_loss(cfg: ModelConfig, objective: str, seed: int = 0, batch: int = 2, length: int = 4) -> float:
    """End-to-end check of the classification or MLM loss on a small batch.

    Dropout is off (no generator is passed) so the loss is deterministic.
    """
    from .model import classification_loss, init_params, mlm_loss

    rng = np.random.default_rng(seed)
    params = init_params(cfg, seed)
    # larger weights than the training init so gradients are not vanishingly small
    params = {k: v * 5 if v.ndim > 1 else v for k, v in params.items()}
    ids = rng.integers(3, cfg.vocab, size=(batch, length))
    mask = np.ones((batch, length), dtype=np.int8)
    mask[-1, -1] = 0
    ids[mask == 0] = 0
    if objective == "classification":
        labels = np.zeros((batch, length), dtype=np.int8)
        labels[:, 1] = 1
        return grad_check(lambda p: classification_loss(p, cfg, ids, mask, labels, pos_weight=3.0), params, seed=seed)
    positions = np.zeros((batch, length), dtype=bool)
    positions[:, 0] = positions[0, 2] = True
    targets = rng.integers(3, cfg.vocab, size=int(positions.sum()))
    return grad_check(lambda p: mlm_loss(p, cfg, ids, mask, positions, targets), params, seed=seed)
