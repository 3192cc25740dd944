"""Ground-truth labels from a buggy/fixed pair via token-level LCS."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..lang import tokenize


def _intern(a: list[str], b: list[str]) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    ia = np.array([ids.setdefault(t, len(ids)) for t in a], dtype=np.int64)
    ib = np.array([ids.setdefault(t, len(ids)) for t in b], dtype=np.int64)
    return ia, ib


def lcs_matches(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    """Index pairs of one longest common subsequence.

    Walks forward through the suffix table; when skipping either side keeps
    the optimum, the ``b`` side is skipped so ``a`` matches as early as
    possible.
    """
    ia, ib = _intern(a, b)
    table = kernels.lcs_table(ia, ib)
    i = j = 0
    out = []
    while i < len(a) and j < len(b):
        if ia[i] == ib[j]:
            out.append((i, j))
            i += 1
            j += 1
        elif table[i, j + 1] >= table[i + 1, j]:
            j += 1
        else:
            i += 1
    return out


def diff_labels(buggy: str, fixed: str) -> np.ndarray:
    """1 on each buggy token left out of the LCS with the fixed program."""
    a = [t.text for t in tokenize(buggy)]
    b = [t.text for t in tokenize(fixed)]
    labels = np.ones(len(a), dtype=np.int8)
    for i, _ in lcs_matches(a, b):
        labels[i] = 0
    return labels
