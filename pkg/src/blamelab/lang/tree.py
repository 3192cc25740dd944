"""Token-level syntax trees and their path-distance matrices.

Each node is collapsed onto its head token; the node's other attached
tokens hang off the head, and each child's head is linked to the parent's
head. The result is a tree whose vertices are exactly the program tokens.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from . import ast as A


def gold_edges(root: A.Node) -> list[tuple[int, int]]:
    """Undirected edges ``(i, j)`` with ``i < j``, sorted."""
    edges = set()
    for node in root.walk():
        h = A.head_token(node)
        for t in node.toks:
            if t != h:
                edges.add((min(h, t), max(h, t)))
        for child in node.children():
            hc = A.head_token(child)
            if hc != h:
                edges.add((min(h, hc), max(h, hc)))
    return sorted(edges)


def tree_distance_matrix(root: A.Node, n_tokens: int | None = None) -> np.ndarray:
    """Number of tree edges between every pair of tokens."""
    if n_tokens is None:
        n_tokens = len(A.subtree_tokens(root))
    edges = np.asarray(gold_edges(root), dtype=np.int64).reshape(-1, 2)
    return kernels.tree_distances(n_tokens, edges)
