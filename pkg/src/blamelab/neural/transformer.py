"""Mini-BERT encoder: learned embeddings followed by post-norm encoder blocks.

Each block is attention, residual, layer norm, GELU feed-forward, residual,
layer norm. ``transformer_forward`` returns the embedding output followed by
every block's output so the probe can pick any layer.
"""
from __future__ import annotations

import numpy as np

from . import layers as F
from .config import ModelConfig
from .errors import ShapeMismatch

INIT_STD = 0.02


def init_transformer(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    h, ff = cfg.hidden, cfg.hidden * cfg.ffn_mult

    def normal(*shape):
        return (rng.standard_normal(shape) * INIT_STD).astype(np.float32)

    p = {
        "tok_emb": normal(cfg.vocab, h),
        "pos_emb": normal(cfg.max_len, h),
        "emb_ln.g": np.ones(h, np.float32),
        "emb_ln.b": np.zeros(h, np.float32),
    }
    for i in range(cfg.layers):
        pre = f"layer{i}."
        p[pre + "w_qkv"] = normal(h, 3 * h)
        p[pre + "b_qkv"] = np.zeros(3 * h, np.float32)
        p[pre + "w_o"] = normal(h, h)
        p[pre + "b_o"] = np.zeros(h, np.float32)
        p[pre + "ln1.g"] = np.ones(h, np.float32)
        p[pre + "ln1.b"] = np.zeros(h, np.float32)
        p[pre + "w_ff1"] = normal(h, ff)
        p[pre + "b_ff1"] = np.zeros(ff, np.float32)
        p[pre + "w_ff2"] = normal(ff, h)
        p[pre + "b_ff2"] = np.zeros(h, np.float32)
        p[pre + "ln2.g"] = np.ones(h, np.float32)
        p[pre + "ln2.b"] = np.zeros(h, np.float32)
    return p


def _check(ids, mask, cfg):
    if ids.ndim != 2 or mask.shape != ids.shape:
        raise ShapeMismatch(f"ids {ids.shape} and mask {mask.shape} must be equal (B, T) shapes")
    if ids.shape[1] > cfg.max_len:
        raise ShapeMismatch(f"sequence length {ids.shape[1]} exceeds max_len={cfg.max_len}")


def transformer_forward(params, cfg: ModelConfig, ids, mask, rng=None):
    """Returns ``(outputs, cache)``; ``outputs[0]`` is the embedding layer and
    ``outputs[-1]`` the final encoder output, each (B, T, H)."""
    _check(ids, mask, cfg)
    t = ids.shape[1]
    rate = cfg.dropout
    x, c_emb = F.embed(params["tok_emb"], ids)
    x = x + params["pos_emb"][:t]
    x, c_eln = F.layer_norm(x, params["emb_ln.g"], params["emb_ln.b"])
    x, k_emb = F.dropout(x, rate, rng)
    outputs = [x]
    blocks = []
    for i in range(cfg.layers):
        pre = f"layer{i}."
        a, c_att = F.attention(
            x, params[pre + "w_qkv"], params[pre + "b_qkv"], params[pre + "w_o"], params[pre + "b_o"], mask, cfg.heads
        )
        a, k_att = F.dropout(a, rate, rng)
        y1, c_ln1 = F.layer_norm(x + a, params[pre + "ln1.g"], params[pre + "ln1.b"])
        f1, c_ff1 = F.linear(y1, params[pre + "w_ff1"], params[pre + "b_ff1"])
        g, c_gelu = F.gelu(f1)
        f2, c_ff2 = F.linear(g, params[pre + "w_ff2"], params[pre + "b_ff2"])
        f2, k_ff = F.dropout(f2, rate, rng)
        x, c_ln2 = F.layer_norm(y1 + f2, params[pre + "ln2.g"], params[pre + "ln2.b"])
        outputs.append(x)
        blocks.append((c_att, k_att, c_ln1, c_ff1, c_gelu, c_ff2, k_ff, c_ln2))
    return outputs, (c_emb, c_eln, k_emb, blocks, t)


def transformer_backward(dout, params, cfg: ModelConfig, cache) -> dict[str, np.ndarray]:
    """Gradients of every parameter given the gradient of the final output."""
    c_emb, c_eln, k_emb, blocks, t = cache
    grads: dict[str, np.ndarray] = {}
    dx = dout
    for i in reversed(range(cfg.layers)):
        pre = f"layer{i}."
        c_att, k_att, c_ln1, c_ff1, c_gelu, c_ff2, k_ff, c_ln2 = blocks[i]
        dr2, grads[pre + "ln2.g"], grads[pre + "ln2.b"] = F.layer_norm_backward(dx, c_ln2)
        df2 = F.dropout_backward(dr2, k_ff)
        dg, grads[pre + "w_ff2"], grads[pre + "b_ff2"] = F.linear_backward(df2, c_ff2)
        df1 = F.gelu_backward(dg, c_gelu)
        dy1, grads[pre + "w_ff1"], grads[pre + "b_ff1"] = F.linear_backward(df1, c_ff1)
        dy1 = dy1 + dr2
        dr1, grads[pre + "ln1.g"], grads[pre + "ln1.b"] = F.layer_norm_backward(dy1, c_ln1)
        da = F.dropout_backward(dr1, k_att)
        dxa, grads[pre + "w_qkv"], grads[pre + "b_qkv"], grads[pre + "w_o"], grads[pre + "b_o"] = F.attention_backward(
            da, c_att
        )
        dx = dr1 + dxa
    dx = F.dropout_backward(dx, k_emb)
    dx, grads["emb_ln.g"], grads["emb_ln.b"] = F.layer_norm_backward(dx, c_eln)
    dpos = np.zeros_like(params["pos_emb"])
    dpos[:t] = dx.sum(axis=0)
    grads["pos_emb"] = dpos
    grads["tok_emb"] = F.embed_backward(dx, c_emb)
    return grads
