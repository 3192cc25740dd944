"""Structural probe: a linear map under which squared embedding distances
track syntax-tree path distances, plus tree reconstruction and UUAS."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .lang import gold_edges, parse, tokenize, tree_distance_matrix
from .neural.errors import DivergenceError, ShapeMismatch

DEFAULT_RANK = 64
DEFAULT_EPOCHS = 40
DEFAULT_LR = 1e-3
INIT_SCALE = 0.05


class EmptyGold(ValueError):
    pass


@dataclass
class ProbeParams:
    B: np.ndarray  # (k, H)
    layer: int = -1
    epochs: int = 0
    final_loss: float = float("nan")
    history: list = field(default_factory=list)


def probe_distance(B, h_i, h_j) -> float:
    """``||B (h_i - h_j)||^2``."""
    B = np.asarray(B, dtype=np.float64)
    h_i = np.asarray(h_i, dtype=np.float64)
    h_j = np.asarray(h_j, dtype=np.float64)
    if h_i.shape != h_j.shape or h_i.ndim != 1 or B.ndim != 2 or B.shape[1] != h_i.shape[0]:
        raise ShapeMismatch(f"B {B.shape} cannot act on vectors {h_i.shape} and {h_j.shape}")
    d = B @ (h_i - h_j)
    return float(d @ d)


def predicted_distances(B, h) -> np.ndarray:
    """All pairwise squared probe distances for one program's (n, H) embeddings."""
    z = np.asarray(h, dtype=np.float64) @ np.asarray(B, dtype=np.float64).T
    sq = np.einsum("ij,ij->i", z, z)
    d = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def probe_loss(B, embeddings: Sequence[np.ndarray], distances: Sequence[np.ndarray]) -> float:
    """Mean over programs of the per-program L1 loss averaged over n^2 pairs."""
    if not embeddings:
        return 0.0
    B = np.asarray(B, dtype=np.float64)
    total = 0.0
    for h, d in zip(embeddings, distances):
        loss, _ = kernels.probe_loss_grad(np.asarray(h, np.float64) @ B.T, np.asarray(d, np.float64))
        total += loss
    return total / len(embeddings)


def fit_probe(
    embeddings: Sequence[np.ndarray],
    distances: Sequence[np.ndarray],
    rank: int = DEFAULT_RANK,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    lr: float = DEFAULT_LR,
    batch_size: int = 16,
    layer: int = -1,
) -> ProbeParams:
    """Adam on B over minibatches of programs."""
    if len(embeddings) != len(distances) or not embeddings:
        raise ShapeMismatch("need one distance matrix per embedded program")
    hidden = embeddings[0].shape[1]
    if not 1 <= rank <= hidden:
        raise ShapeMismatch(f"probe rank {rank} must lie in [1, {hidden}]")
    for h, d in zip(embeddings, distances):
        if d.shape != (h.shape[0], h.shape[0]):
            raise ShapeMismatch(f"distance matrix {d.shape} does not match {h.shape[0]} tokens")
    rng = np.random.default_rng(seed)
    B = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(rank, hidden))
    hs = [np.asarray(h, np.float64) for h in embeddings]
    ds = [np.asarray(d, np.float64) for d in distances]
    m = np.zeros_like(B)
    v = np.zeros_like(B)
    t = 0
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(hs))
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            grad = np.zeros_like(B)
            for i in idx:
                _, dz = kernels.probe_loss_grad(hs[i] @ B.T, ds[i])
                grad += dz.T @ hs[i]
            grad /= len(idx)
            t += 1
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad * grad
            B = B - lr * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        loss = probe_loss(B, hs, ds)
        if not math.isfinite(loss):
            raise DivergenceError(f"probe loss became non-finite in epoch {epoch}")
        history.append(loss)
    final = history[-1] if history else probe_loss(B, hs, ds)
    return ProbeParams(B=B, layer=layer, epochs=epochs, final_loss=float(final), history=history)


def reconstruct_tree(dist) -> list[tuple[int, int]]:
    """Minimum spanning tree (Prim) over the predicted distances, as sorted
    ``(i, j)`` pairs with ``i < j``."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ShapeMismatch(f"distance matrix must be square, got {dist.shape}")
    edges = kernels.prim_mst(dist)
    return sorted((int(min(a, b)), int(max(a, b))) for a, b in edges)


def uuas(predicted, gold) -> float:
    g = {tuple(sorted(map(int, e))) for e in gold}
    if not g:
        raise EmptyGold("gold tree has no edges (program shorter than 2 tokens)")
    p = {tuple(sorted(map(int, e))) for e in predicted}
    return len(p & g) / len(g)


def gold_tree(source: str) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Gold edges and the tree distance matrix of a program."""
    tokens = tokenize(source)
    root = parse(tokens)
    return gold_edges(root), tree_distance_matrix(root, len(tokens)).astype(np.float64)


def evaluate_probe(probe: ProbeParams, embeddings, golds) -> tuple[float, float, list]:
    """Mean UUAS, mean loss and per-program predicted edges on held-out data."""
    scores, preds = [], []
    for h, (edges, _) in zip(embeddings, golds):
        pred = reconstruct_tree(predicted_distances(probe.B, h))
        preds.append(pred)
        if edges:
            scores.append(uuas(pred, edges))
    loss = probe_loss(probe.B, embeddings, [d for _, d in golds])
    return float(np.mean(scores)) if scores else 0.0, float(loss), preds


def middle_layer(n_layers: int) -> int:
    """Index into the encoder's output list (0 is the embedding layer)."""
    return max(1, n_layers // 2)


def probe_report(
    model,
    control,
    train_pairs,
    test_pairs,
    layer: Optional[int] = None,
    rank: int = DEFAULT_RANK,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    model_name: str = "model",
    control_name: str = "control",
    n_samples: int = 5,
) -> dict:
    """Fit one probe per checkpoint on train programs and score both on test.

    ``model`` and ``control`` are ``(ModelConfig, params)`` pairs.
    """
    from .neural.model import layer_embeddings
    from .neural.vocab import DEFAULT_VOCAB

    (cfg_m, p_m), (cfg_c, p_c) = model, control
    if cfg_m.arch != cfg_c.arch or cfg_m.layers != cfg_c.layers:
        raise ShapeMismatch("model and control must share an architecture and depth")
    if layer is None:
        layer = middle_layer(cfg_m.layers)
    enc_tr = [DEFAULT_VOCAB.encode(p.tokens) for p in train_pairs]
    enc_te = [DEFAULT_VOCAB.encode(p.tokens) for p in test_pairs]
    gold_tr = [gold_tree(p.buggy) for p in train_pairs]
    gold_te = [gold_tree(p.buggy) for p in test_pairs]
    results = []
    for cfg, params in ((cfg_m, p_m), (cfg_c, p_c)):
        h_tr = layer_embeddings(params, cfg, enc_tr, layer)
        h_te = layer_embeddings(params, cfg, enc_te, layer)
        probe = fit_probe(h_tr, [d for _, d in gold_tr], rank=rank, epochs=epochs, seed=seed, layer=layer)
        results.append(evaluate_probe(probe, h_te, gold_te))
    (m_uuas, m_loss, m_pred), (c_uuas, c_loss, _) = results
    samples = [
        {"id": p.id, "gold_edges": [list(e) for e in g[0]], "pred_edges": [list(e) for e in pred]}
        for p, g, pred in list(zip(test_pairs, gold_te, m_pred))[:n_samples]
    ]
    return {
        "model": str(model_name),
        "control": str(control_name),
        "layer": int(layer),
        "rank": int(rank),
        "mean_uuas": m_uuas,
        "control_mean_uuas": c_uuas,
        "mean_loss": m_loss,
        "control_mean_loss": c_loss,
        "samples": samples,
    }
