"""Strict IoU accuracy, the loose top-k metric, and corpus aggregation."""
from __future__ import annotations

from typing import Sequence

import numpy as np


class LengthMismatch(ValueError):
    pass


def _probs(pred) -> np.ndarray:
    p = np.asarray(pred, dtype=np.float64)
    if p.ndim != 1 or not np.all(np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must be a finite 1-D array in [0, 1]")
    return p


def binarize(pred, threshold: float = 0.5) -> np.ndarray:
    """1 where the probability is strictly above ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (_probs(pred) > threshold).astype(np.int8)


def iou_accuracy(P, L) -> float:
    """|P and L| / |P or L| over token bit-vectors; two empty sets score 1.0."""
    p = np.asarray(P).astype(bool)
    l = np.asarray(L).astype(bool)
    if p.shape != l.shape:
        raise LengthMismatch(f"prediction has {p.size} tokens, labels have {l.size}")
    union = int(np.count_nonzero(p | l))
    if union == 0:
        return 1.0
    return np.count_nonzero(p & l) / union


def top_k_indices(pred, k: int) -> np.ndarray:
    p = _probs(pred)
    # stable sort on -p keeps the lower index first among ties
    return np.argsort(-p, kind="stable")[:k]


def top_k_hit(pred, L, k: int = 3) -> int:
    if k < 1:
        raise ValueError("k must be at least 1")
    l = np.asarray(L)
    if len(l) != len(pred):
        raise LengthMismatch(f"prediction has {len(pred)} tokens, labels have {len(l)}")
    return int(bool(np.any(l[top_k_indices(pred, k)] == 1)))


def corpus_accuracy(pairs, predictions: Sequence, threshold: float = 0.5) -> dict:
    """Macro-averaged IoU and top-3 rate; ``per_program`` is ordered by id."""
    if len(pairs) != len(predictions):
        raise LengthMismatch(f"{len(pairs)} programs but {len(predictions)} predictions")
    rows = []
    for pair, pred in zip(pairs, predictions):
        labels = np.asarray(pair.labels)
        if len(pred) != len(labels):
            raise LengthMismatch(f"{pair.id}: {len(pred)} probabilities for {len(labels)} tokens")
        rows.append(
            {
                "id": pair.id,
                "iou": float(iou_accuracy(binarize(pred, threshold), labels)),
                "top3": top_k_hit(pred, labels, 3),
            }
        )
    rows.sort(key=lambda r: r["id"])
    n = len(rows)
    return {
        "mean_iou": float(np.mean([r["iou"] for r in rows])) if n else 0.0,
        "top3_rate": float(np.mean([r["top3"] for r in rows])) if n else 0.0,
        "per_program": rows,
    }


def threshold_sweep(pairs, predictions, thresholds) -> list[tuple[float, float]]:
    ts = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("thresholds must be strictly increasing")
    return [(t, corpus_accuracy(pairs, predictions, t)["mean_iou"]) for t in ts]


def make_report(model: str, corpus: str, threshold: float, acc: dict, **extra) -> dict:
    """The evaluation report layout shared by every scorer."""
    report = {
        "model": model,
        "corpus": str(corpus),
        "threshold": float(threshold),
        "mean_iou": acc["mean_iou"],
        "top3_rate": acc["top3_rate"],
        "per_program": acc["per_program"],
    }
    report.update(extra)
    return report
