"""Encoder dispatch, the token-classification and MLM heads, and their losses."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import layers as F
from .bilstm import bilstm_backward, bilstm_forward, init_bilstm
from .config import ModelConfig
from .transformer import init_transformer, transformer_backward, transformer_forward
from .vocab import pad_batch


def out_dim(cfg: ModelConfig) -> int:
    return 2 * cfg.hidden if cfg.arch == "bilstm" else cfg.hidden


def init_params(cfg: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Encoder weights plus both heads, drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    p = init_bilstm(cfg, rng) if cfg.arch == "bilstm" else init_transformer(cfg, rng)
    d = out_dim(cfg)
    p["cls.w"] = (rng.standard_normal((d, 1)) * 0.02).astype(np.float32)
    p["cls.b"] = np.zeros(1, np.float32)
    p["mlm.w"] = (rng.standard_normal((d, cfg.vocab)) * 0.02).astype(np.float32)
    p["mlm.b"] = np.zeros(cfg.vocab, np.float32)
    return p


def encode(params, cfg: ModelConfig, ids, mask, rng=None):
    """All layer outputs of the configured encoder and a cache for ``encoder_backward``."""
    if cfg.arch == "bilstm":
        return bilstm_forward(params, cfg, ids, mask, rng)
    return transformer_forward(params, cfg, ids, mask, rng)


def encoder_backward(dout, params, cfg: ModelConfig, cache):
    if cfg.arch == "bilstm":
        return bilstm_backward(dout, params, cfg, cache)
    return transformer_backward(dout, params, cfg, cache)


def classify_tokens(emb, w, b):
    """Per-token sigmoid probabilities from embeddings (..., H)."""
    return F.sigmoid((emb @ w + b)[..., 0])


def classification_loss(params, cfg: ModelConfig, ids, mask, labels, pos_weight: float = 1.0, rng=None):
    """Mean positive-weighted BCE over real tokens and gradients for every parameter."""
    outs, cache = encode(params, cfg, ids, mask, rng)
    h = outs[-1]
    z, c_head = F.linear(h, params["cls.w"], params["cls.b"])
    z = z[..., 0]
    m = mask.astype(z.dtype)
    y = labels.astype(z.dtype)
    weight = m * np.where(y > 0, pos_weight, 1.0).astype(z.dtype)
    n = max(float(m.sum()), 1.0)
    loss, dz = F.weighted_bce_with_logits(z, y, weight)
    dz = (dz / n)[..., None].astype(z.dtype)
    dh, dw, db = F.linear_backward(dz, c_head)
    grads = encoder_backward(dh, params, cfg, cache)
    grads["cls.w"], grads["cls.b"] = dw, db
    grads["mlm.w"] = np.zeros_like(params["mlm.w"])
    grads["mlm.b"] = np.zeros_like(params["mlm.b"])
    return float(loss / n), grads


def mlm_loss(params, cfg: ModelConfig, ids, mask, positions, targets, rng=None):
    """Cross-entropy over masked positions. ``positions`` is a (B, T) boolean
    array marking the selected tokens; ``targets`` holds their original ids
    in row-major order."""
    outs, cache = encode(params, cfg, ids, mask, rng)
    h = outs[-1]
    sel = h[positions]
    logits, c_head = F.linear(sel, params["mlm.w"], params["mlm.b"])
    loss, dlogits = F.softmax_cross_entropy(logits, targets)
    dsel, dw, db = F.linear_backward(dlogits.astype(h.dtype), c_head)
    dh = np.zeros_like(h)
    dh[positions] = dsel
    grads = encoder_backward(dh, params, cfg, cache)
    grads["mlm.w"], grads["mlm.b"] = dw, db
    grads["cls.w"] = np.zeros_like(params["cls.w"])
    grads["cls.b"] = np.zeros_like(params["cls.b"])
    return float(loss), grads


def _sorted_chunks(encoded, batch_size):
    # length-sorted batches keep padding small; callers restore input order
    order = np.argsort([len(e) for e in encoded], kind="stable")
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        chunk = [encoded[i] for i in idx]
        ids, mask = pad_batch(chunk)
        yield idx, chunk, ids, mask


def predict(params, cfg: ModelConfig, encoded: Sequence[np.ndarray], batch_size: int = 64) -> list[np.ndarray]:
    """Blame probabilities (float64) for each id sequence, padding excluded."""
    out: list = [None] * len(encoded)
    for idx, chunk, ids, mask in _sorted_chunks(encoded, batch_size):
        outs, _ = encode(params, cfg, ids, mask)
        probs = classify_tokens(outs[-1], params["cls.w"], params["cls.b"])
        for row, (i, s) in enumerate(zip(idx, chunk)):
            out[i] = probs[row, : len(s)].astype(np.float64)
    return out


def layer_embeddings(params, cfg: ModelConfig, encoded: Sequence[np.ndarray], layer: int, batch_size: int = 64):
    """Per-program (n, H) embeddings from output ``layer`` (0 is the embedding layer)."""
    out: list = [None] * len(encoded)
    for idx, chunk, ids, mask in _sorted_chunks(encoded, batch_size):
        outs, _ = encode(params, cfg, ids, mask)
        for row, (i, s) in enumerate(zip(idx, chunk)):
            out[i] = outs[layer][row, : len(s)].astype(np.float64)
    return out
