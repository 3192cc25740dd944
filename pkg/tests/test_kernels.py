"""The numba and numpy variants of every kernel must agree."""
import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from blamelab import kernels as K

small_ints = hnp.arrays(np.int64, st.integers(0, 12), elements=st.integers(0, 3))


@given(small_ints, small_ints)
@settings(max_examples=80, deadline=None)
def test_lcs_table_parity(a, b):
    nb, np_ = K.lcs_table_nb(a, b), K.lcs_table_np(a, b)
    assert np.array_equal(nb, np_)


def _brute_lcs(a, b):
    best = 0
    for r in range(len(a) + 1):
        for idx in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in idx]
            it = iter(b)
            if all(x in it for x in sub):
                best = max(best, r)
    return best


@given(hnp.arrays(np.int64, st.integers(0, 7), elements=st.integers(0, 2)), small_ints)
@settings(max_examples=40, deadline=None)
def test_lcs_length_matches_brute_force(a, b):
    assert K.lcs_table(a, b)[0, 0] == _brute_lcs(list(a), list(b))


@st.composite
def random_trees(draw):
    n = draw(st.integers(1, 14))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    edges = np.array([(p, i + 1) for i, p in enumerate(parents)], dtype=np.int64).reshape(-1, 2)
    return n, edges


@given(random_trees())
@settings(max_examples=80, deadline=None)
def test_tree_distances_parity(tree):
    n, edges = tree
    nb, np_ = K.tree_distances_nb(n, edges), K.tree_distances_np(n, edges)
    assert np.array_equal(nb, np_)
    assert np.all(nb >= 0)


def _mst_weight(dist, edges):
    return sum(dist[i, j] for i, j in edges)


def _spans(n, edges):
    seen = {0}
    frontier = [0]
    adj = {i: set() for i in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    while frontier:
        u = frontier.pop()
        for v in adj[u] - seen:
            seen.add(v)
            frontier.append(v)
    return len(seen) == n and len(edges) == n - 1


@given(st.integers(1, 9), st.integers(0, 10_000), st.booleans())
@settings(max_examples=80, deadline=None)
def test_prim_parity_and_optimality(n, seed, ties):
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 3, size=(n, n)).astype(np.float64) if ties else rng.random((n, n))
    dist = np.triu(w, 1) + np.triu(w, 1).T
    nb, np_ = K.prim_mst_nb(dist), K.prim_mst_np(dist)
    assert np.array_equal(nb, np_)
    edges = [tuple(e) for e in nb]
    assert _spans(n, edges)
    if n <= 6:
        # exhaustive check against every spanning tree
        pairs = list(itertools.combinations(range(n), 2))
        best = min(
            (_mst_weight(dist, c) for c in itertools.combinations(pairs, n - 1) if _spans(n, c)),
            default=0.0,
        )
        assert np.isclose(_mst_weight(dist, edges), best)


def test_prim_ties_pick_smallest_pair():
    dist = np.ones((4, 4)) - np.eye(4)
    assert K.prim_mst(dist).tolist() == [[0, 1], [0, 2], [0, 3]]


@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_lstm_pointwise_parity(b, h, seed):
    rng = np.random.default_rng(seed)
    gates = rng.normal(0, 2, (b, 4 * h))
    c = rng.normal(size=(b, h))
    hp = rng.normal(size=(b, h))
    mask = rng.integers(0, 2, b).astype(np.int8)
    for x, y in zip(K.lstm_pointwise_nb(gates, c, hp, mask), K.lstm_pointwise_np(gates, c, hp, mask)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


@given(st.integers(1, 8), st.integers(1, 5), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_probe_loss_parity(n, k, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, k))
    t = rng.integers(0, 5, (n, n)).astype(np.float64)
    t = t + t.T
    np.fill_diagonal(t, 0)
    (l1, g1), (l2, g2) = K.probe_loss_grad_nb(z, t), K.probe_loss_grad_np(z, t)
    assert np.isclose(l1, l2, rtol=1e-12)
    np.testing.assert_allclose(g1, g2, rtol=1e-10, atol=1e-12)
