"""Stacked bidirectional LSTM encoder with backpropagation through time."""
from __future__ import annotations

import numpy as np

from .. import kernels
from . import layers as F
from .config import ModelConfig
from .errors import ShapeMismatch

INIT_STD = 0.1


def init_bilstm(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    h = cfg.hidden
    p = {"tok_emb": (rng.standard_normal((cfg.vocab, h)) * INIT_STD).astype(np.float32)}
    for i in range(cfg.layers):
        d_in = h if i == 0 else 2 * h
        for d in ("fw", "bw"):
            pre = f"layer{i}.{d}."
            p[pre + "w_x"] = (rng.standard_normal((d_in, 4 * h)) / np.sqrt(d_in)).astype(np.float32)
            p[pre + "w_h"] = (rng.standard_normal((h, 4 * h)) / np.sqrt(h)).astype(np.float32)
            b = np.zeros(4 * h, np.float32)
            b[h : 2 * h] = 1.0  # forget-gate bias
            p[pre + "b"] = b
    return p


def _run_direction(xw, w_h, mask, reverse):
    """One LSTM pass over precomputed input projections ``xw`` (B, T, 4H)."""
    bsz, t, h4 = xw.shape
    hd = h4 // 4
    dt = xw.dtype
    c = np.zeros((bsz, hd), dt)
    h = np.zeros((bsz, hd), dt)
    out = np.empty((bsz, t, hd), dt)
    steps = []
    order = range(t - 1, -1, -1) if reverse else range(t)
    for s in order:
        gates = xw[:, s] + h @ w_h
        act, c_new, h_new, tc = kernels.lstm_pointwise(gates, c, h, mask[:, s])
        steps.append((s, act, c, h, tc))
        c, h = c_new, h_new
        out[:, s] = h
    return out, steps


def _back_direction(dout, w_h, mask, steps):
    """BPTT for one direction; returns d(xw) and dW_h."""
    bsz, t, hd = dout.shape
    dxw = np.zeros((bsz, t, 4 * hd), dout.dtype)
    dw_h = np.zeros_like(w_h)
    dh = np.zeros((bsz, hd), dout.dtype)
    dc = np.zeros((bsz, hd), dout.dtype)
    for s, act, c_prev, h_prev, tc in reversed(steps):
        keep = (mask[:, s] > 0)[:, None]
        dh = dh + dout[:, s]
        i, f, g, o = act[:, :hd], act[:, hd : 2 * hd], act[:, 2 * hd : 3 * hd], act[:, 3 * hd :]
        dct = dc + dh * o * (1.0 - tc * tc)
        dgates = np.concatenate(
            [dct * g * i * (1.0 - i), dct * c_prev * f * (1.0 - f), dct * i * (1.0 - g * g), dh * tc * o * (1.0 - o)],
            axis=1,
        )
        dgates = np.where(keep, dgates, 0.0).astype(dout.dtype)
        dxw[:, s] = dgates
        dw_h += h_prev.T @ dgates
        # masked rows pass their state gradient straight through
        dh = np.where(keep, dgates @ w_h.T, dh)
        dc = np.where(keep, dct * f, dc)
    return dxw, dw_h


def bilstm_forward(params, cfg: ModelConfig, ids, mask, rng=None):
    """Returns ``(outputs, cache)``: the embeddings then each layer's (B, T, 2H)
    concatenation of the forward and backward passes."""
    if ids.ndim != 2 or mask.shape != ids.shape:
        raise ShapeMismatch(f"ids {ids.shape} and mask {mask.shape} must be equal (B, T) shapes")
    x, c_emb = F.embed(params["tok_emb"], ids)
    x, k_emb = F.dropout(x, cfg.dropout, rng)
    outputs = [x]
    caches = []
    for i in range(cfg.layers):
        pre = f"layer{i}."
        halves = []
        dirs = []
        for d, rev in (("fw", False), ("bw", True)):
            xw, c_x = F.linear(x, params[pre + d + ".w_x"], params[pre + d + ".b"])
            out, steps = _run_direction(xw, params[pre + d + ".w_h"], mask, rev)
            halves.append(out)
            dirs.append((c_x, steps))
        y = np.concatenate(halves, axis=-1)
        x, k = F.dropout(y, cfg.dropout, rng) if i < cfg.layers - 1 else (y, None)
        outputs.append(x)
        caches.append((dirs, k))
    return outputs, (c_emb, k_emb, caches, mask)


def bilstm_backward(dout, params, cfg: ModelConfig, cache) -> dict[str, np.ndarray]:
    c_emb, k_emb, caches, mask = cache
    grads: dict[str, np.ndarray] = {}
    hd = cfg.hidden
    dx = dout
    for i in reversed(range(cfg.layers)):
        pre = f"layer{i}."
        dirs, k = caches[i]
        dy = F.dropout_backward(dx, k)
        dx = 0.0
        for j, d in enumerate(("fw", "bw")):
            c_x, steps = dirs[j]
            dxw, grads[pre + d + ".w_h"] = _back_direction(
                dy[..., j * hd : (j + 1) * hd], params[pre + d + ".w_h"], mask, steps
            )
            dxi, grads[pre + d + ".w_x"], grads[pre + d + ".b"] = F.linear_backward(dxw, c_x)
            dx = dx + dxi
    dx = F.dropout_backward(dx, k_emb)
    grads["tok_emb"] = F.embed_backward(dx, c_emb)
    return grads
