"""Differentiable primitives as forward/backward function pairs.

Forward functions return ``(out, cache)``; backward functions take the
upstream gradient and the cache. Everything follows the dtype of its inputs,
so the same code runs in float32 for training and float64 for gradient checks.
"""
from __future__ import annotations

import numpy as np

_GELU_C = float(np.sqrt(2.0 / np.pi))


def linear(x, w, b):
    # one 2-D GEMM; a batched 3-D matmul is several times slower
    y = x.reshape(-1, x.shape[-1]) @ w
    y += b
    return y.reshape(x.shape[:-1] + (w.shape[1],)), (x, w)


def linear_backward(dy, cache):
    x, w = cache
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    dx = (dy2 @ w.T).reshape(x.shape)
    return dx, x2.T @ dy2, dy2.sum(axis=0)


def layer_norm(x, gamma, beta, eps=1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return xhat * gamma + beta, (xhat, inv, gamma)


def layer_norm_backward(dy, cache):
    xhat, inv, gamma = cache
    n = xhat.shape[-1]
    dxhat = dy * gamma
    dx = inv / n * (n * dxhat - dxhat.sum(axis=-1, keepdims=True) - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
    flat = dy.reshape(-1, n)
    return dx, (flat * xhat.reshape(-1, n)).sum(axis=0), flat.sum(axis=0)


def gelu(x):
    """tanh approximation of GELU."""
    u = _GELU_C * (x + 0.044715 * (x * x * x))
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_backward(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def softmax(s, axis=-1):
    m = np.max(s, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(s - m)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(dp, p, axis=-1):
    return p * (dp - (dp * p).sum(axis=axis, keepdims=True))


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def dropout(x, rate, rng):
    if rng is None or rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(dy, keep):
    return dy if keep is None else dy * keep


def embed(table, ids):
    return table[ids], (ids, table.shape[0])


def embed_backward(dy, cache):
    ids, vocab = cache
    flat = ids.reshape(-1)
    onehot = np.zeros((flat.size, vocab), dtype=dy.dtype)
    onehot[np.arange(flat.size), flat] = 1.0
    return onehot.T @ dy.reshape(flat.size, -1)


def attention(x, w_qkv, b_qkv, w_o, b_o, mask, heads):
    """Multi-head scaled dot-product self-attention.

    ``mask`` is (B, T) with 1 on real tokens; padded keys get -inf scores.
    """
    bsz, t, h = x.shape
    d = h // heads
    qkv, c_in = linear(x, w_qkv, b_qkv)
    qkv = qkv.reshape(bsz, t, 3, heads, d).transpose(2, 0, 3, 1, 4)
    q, k, v = qkv[0], qkv[1], qkv[2]
    scale = 1.0 / float(np.sqrt(d))
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    key_ok = mask[:, None, None, :].astype(bool)
    scores = np.where(key_ok, scores, -np.inf)
    p = softmax(scores)
    ctx = (p @ v).transpose(0, 2, 1, 3).reshape(bsz, t, h)
    out, c_out = linear(ctx, w_o, b_o)
    return out, (c_in, q, k, v, p, scale, c_out, heads)


def attention_backward(dout, cache):
    c_in, q, k, v, p, scale, c_out, heads = cache
    bsz, _, t, d = q.shape
    dctx, dw_o, db_o = linear_backward(dout, c_out)
    dctx = dctx.reshape(bsz, t, heads, d).transpose(0, 2, 1, 3)
    dp = dctx @ v.transpose(0, 1, 3, 2)
    dv = p.transpose(0, 1, 3, 2) @ dctx
    ds = softmax_backward(dp, p) * scale
    dq = ds @ k
    dk = ds.transpose(0, 1, 3, 2) @ q
    dqkv = np.stack([dq, dk, dv]).transpose(1, 3, 0, 2, 4).reshape(bsz, t, 3 * heads * d)
    dx, dw_qkv, db_qkv = linear_backward(dqkv, c_in)
    return dx, dw_qkv, db_qkv, dw_o, db_o


def weighted_bce_with_logits(z, y, weight):
    """Sum of ``weight * BCE(sigmoid(z), y)`` and its gradient w.r.t. ``z``."""
    # softplus(z) - y*z, computed stably
    loss = (np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))) * weight
    return loss.sum(), weight * (sigmoid(z) - y)


def softmax_cross_entropy(logits, targets):
    """Mean cross-entropy over rows of ``logits`` (N, V) and its gradient."""
    n = logits.shape[0]
    m = logits.max(axis=1, keepdims=True)
    z = logits - m
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    loss = -logp[np.arange(n), targets].mean()
    grad = np.exp(logp)
    grad[np.arange(n), targets] -= 1.0
    return loss, grad / n
