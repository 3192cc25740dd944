"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names dispatch on ``BLAMELAB_JIT`` (see ``_jit``), except that the
LSTM cell update always uses numpy, which is faster for it. Both variants
are importable as ``<name>_nb`` / ``<name>_np`` so they can be compared in
tests and benchmarks. Integer kernels agree exactly; float kernels agree to
rounding.
"""
from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

# -- LCS suffix table ----------------------------------------------------------
# table[i, j] = length of the LCS of a[i:] and b[j:]


@njit
def lcs_table_nb(a, b):
    n, m = a.shape[0], b.shape[0]
    table = np.zeros((n + 1, m + 1), dtype=np.int32)
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                table[i, j] = table[i + 1, j + 1] + 1
            else:
                x = table[i + 1, j]
                y = table[i, j + 1]
                table[i, j] = x if x >= y else y
    return table


def lcs_table_np(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    n, m = a.shape[0], b.shape[0]
    table = np.zeros((n + 1, m + 1), dtype=np.int32)
    for i in range(n - 1, -1, -1):
        below = table[i + 1]
        cand = np.maximum(below[:m], np.where(a[i] == b, below[1:] + 1, 0))
        # table[i, j] = max(cand[j], table[i, j + 1]): a suffix running max
        table[i, :m] = np.maximum.accumulate(cand[::-1])[::-1]
    return table


# -- all-pairs distances in an unweighted tree ----------------------------------


@njit
def tree_distances_nb(n, edges):
    deg = np.zeros(n + 1, dtype=np.int64)
    for k in range(edges.shape[0]):
        deg[edges[k, 0] + 1] += 1
        deg[edges[k, 1] + 1] += 1
    for i in range(n):
        deg[i + 1] += deg[i]
    adj = np.empty(deg[n], dtype=np.int64)
    fill = deg[:n].copy()
    for k in range(edges.shape[0]):
        u, v = edges[k, 0], edges[k, 1]
        adj[fill[u]] = v
        fill[u] += 1
        adj[fill[v]] = u
        fill[v] += 1
    dist = np.full((n, n), -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[s, s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(deg[u], deg[u + 1]):
                v = adj[p]
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    queue[tail] = v
                    tail += 1
    return dist


def tree_distances_np(n, edges):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    adj = np.zeros((n, n), dtype=bool)
    adj[edges[:, 0], edges[:, 1]] = True
    adj[edges[:, 1], edges[:, 0]] = True
    dist = np.full((n, n), -1, dtype=np.int64)
    reached = np.eye(n, dtype=bool)
    frontier = reached.copy()
    dist[reached] = 0
    step = 0
    # breadth-first search from every source at once
    while frontier.any():
        step += 1
        nxt = (frontier.astype(np.int64) @ adj.astype(np.int64)) > 0
        nxt &= ~reached
        dist[nxt] = step
        reached |= nxt
        frontier = nxt
    return dist


# -- Prim's minimum spanning tree -------------------------------------------------
# Ties go to the lexicographically smallest (i, j) with i < j.


@njit
def prim_mst_nb(dist):
    n = dist.shape[0]
    out = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    if n <= 1:
        return out
    in_tree = np.zeros(n, dtype=np.bool_)
    in_tree[0] = True
    for k in range(n - 1):
        best = np.inf
        bi, bj = -1, -1
        for i in range(n):
            for j in range(i + 1, n):
                if in_tree[i] != in_tree[j]:
                    w = dist[i, j]
                    if w < best:
                        best = w
                        bi, bj = i, j
        if bi < 0:
            # infinite or NaN weights: attach the smallest outside index
            for i in range(n):
                if not in_tree[i]:
                    for j in range(n):
                        if in_tree[j]:
                            bi, bj = min(i, j), max(i, j)
                            break
                    break
        out[k, 0] = bi
        out[k, 1] = bj
        in_tree[bi] = True
        in_tree[bj] = True
    return out


def prim_mst_np(dist):
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    out = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    if n <= 1:
        return out
    iu, ju = np.triu_indices(n, k=1)
    w = dist[iu, ju]
    order = np.lexsort((ju, iu, w))  # weight, then i, then j
    iu, ju, w = iu[order], ju[order], w[order]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    for k in range(n - 1):
        crossing = in_tree[iu] != in_tree[ju]
        first = int(np.argmax(crossing))
        bi, bj = iu[first], ju[first]
        out[k] = (bi, bj)
        in_tree[bi] = in_tree[bj] = True
    return out


# -- LSTM cell pointwise update -------------------------------------------------
# gates: (B, 4H) pre-activations in [input, forget, cell, output] order.
# Masked rows (mask == 0) carry the previous state through unchanged.


@njit
def lstm_pointwise_nb(gates, c_prev, h_prev, mask):
    b, h4 = gates.shape
    hd = h4 // 4
    act = np.empty_like(gates)
    c = np.empty_like(c_prev)
    h = np.empty_like(h_prev)
    tc = np.empty_like(c_prev)
    for r in range(b):
        for k in range(hd):
            ig = 1.0 / (1.0 + np.exp(-gates[r, k]))
            fg = 1.0 / (1.0 + np.exp(-gates[r, hd + k]))
            gg = np.tanh(gates[r, 2 * hd + k])
            og = 1.0 / (1.0 + np.exp(-gates[r, 3 * hd + k]))
            act[r, k] = ig
            act[r, hd + k] = fg
            act[r, 2 * hd + k] = gg
            act[r, 3 * hd + k] = og
            cn = fg * c_prev[r, k] + ig * gg
            t = np.tanh(cn)
            tc[r, k] = t
            if mask[r] > 0:
                c[r, k] = cn
                h[r, k] = og * t
            else:
                c[r, k] = c_prev[r, k]
                h[r, k] = h_prev[r, k]
    return act, c, h, tc


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_pointwise_np(gates, c_prev, h_prev, mask):
    hd = gates.shape[1] // 4
    act = np.empty_like(gates)
    act[:, :hd] = _sigmoid(gates[:, :hd])
    act[:, hd : 2 * hd] = _sigmoid(gates[:, hd : 2 * hd])
    act[:, 2 * hd : 3 * hd] = np.tanh(gates[:, 2 * hd : 3 * hd])
    act[:, 3 * hd :] = _sigmoid(gates[:, 3 * hd :])
    cn = act[:, hd : 2 * hd] * c_prev + act[:, :hd] * act[:, 2 * hd : 3 * hd]
    tc = np.tanh(cn)
    keep = (mask > 0)[:, None]
    c = np.where(keep, cn, c_prev)
    h = np.where(keep, act[:, 3 * hd :] * tc, h_prev)
    return act, c.astype(gates.dtype), h.astype(gates.dtype), tc


# -- structural probe loss ------------------------------------------------------


@njit
def probe_loss_grad_nb(z, target):
    """L1 loss between squared distances of rows of ``z`` and ``target``,
    averaged over n^2 ordered pairs, with its gradient w.r.t. ``z``."""
    n = z.shape[0]
    gram = z @ z.T
    scale = 1.0 / (n * n)
    sym = np.zeros((n, n))
    loss = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            r = gram[i, i] + gram[j, j] - 2.0 * gram[i, j] - target[i, j]
            loss += abs(r) * scale
            s = scale if r > 0 else (-scale if r < 0 else 0.0)
            sym[i, j] += s
            sym[j, i] += s
    # d/dz of sum_ij s_ij |z_i - z_j|^2, as two matrix products
    grad = 2.0 * (sym.sum(axis=1).reshape(n, 1) * z - sym @ z)
    return loss, grad


def probe_loss_grad_np(z, target):
    n = z.shape[0]
    sq = np.einsum("ij,ij->i", z, z)
    pred = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.fill_diagonal(pred, 0.0)
    resid = pred - target
    np.fill_diagonal(resid, 0.0)
    scale = 1.0 / (n * n)
    loss = float(np.abs(resid).sum() * scale)
    s = np.sign(resid) * scale
    sym = s + s.T
    grad = 2.0 * (sym.sum(axis=1)[:, None] * z - sym @ z)
    return loss, grad


if USE_NUMBA:
    lcs_table = lcs_table_nb
    tree_distances = tree_distances_nb
    prim_mst = prim_mst_nb
    # numpy's SIMD tanh/exp beat numba's scalar calls here (see the benchmark)
    lstm_pointwise = lstm_pointwise_np
    probe_loss_grad = probe_loss_grad_nb
else:
    lcs_table = lcs_table_np
    tree_distances = tree_distances_np
    prim_mst = prim_mst_np
    lstm_pointwise = lstm_pointwise_np
    probe_loss_grad = probe_loss_grad_np
