import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from blamelab.corpus import CorpusManifest, build_corpus
from blamelab.lang import gold_edges, parse, tokenize, tree_distance_matrix
from blamelab.neural import ModelConfig, ShapeMismatch, init_params
from blamelab.probe import (
    EmptyGold,
    fit_probe,
    gold_tree,
    middle_layer,
    predicted_distances,
    probe_distance,
    probe_loss,
    probe_report,
    reconstruct_tree,
    uuas,
)

vec3 = hnp.arrays(np.float64, 3, elements=st.floats(-10, 10))


def test_probe_distance_examples():
    h = np.array([1.0, 2.0, 3.0])
    assert probe_distance(np.eye(3), h, h) == 0.0
    assert probe_distance(np.eye(3), np.zeros(3), np.array([0.0, 1.0, 0.0])) == 1.0
    rng = np.random.default_rng(0)
    B, a, b = rng.normal(size=(2, 3)), rng.normal(size=3), rng.normal(size=3)
    diff = a - b
    brute = sum(sum(B[r, c] * diff[c] for c in range(3)) ** 2 for r in range(2))
    assert np.isclose(probe_distance(B, a, b), brute)
    assert np.isclose(predicted_distances(B, np.stack([a, b]))[0, 1], brute)
    with pytest.raises(ShapeMismatch):
        probe_distance(np.eye(3), np.zeros(3), np.zeros(4))


@given(vec3, vec3, st.integers(0, 1000))
def test_probe_distance_is_squared_pseudometric(a, b, seed):
    B = np.random.default_rng(seed).normal(size=(2, 3))
    d = probe_distance(B, a, b)
    assert d >= 0 and np.isclose(d, probe_distance(B, b, a)) and probe_distance(B, a, a) == 0


def _path_gold(n):
    d = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]).astype(np.float64)
    return d


def test_realizable_fit_goes_to_zero():
    # a 3-token path; squared distances need orthogonal unit steps (0, e1, e1+e2)
    # since collinear points at 0, 1, 2 would put the ends 4 apart, not 2
    h = np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]])
    probe = fit_probe([h] * 4, [_path_gold(3)] * 4, rank=2, epochs=400, lr=1e-2, seed=0)
    assert probe.final_loss < 1e-2
    assert probe.history[-1] <= probe.history[0]


def test_zero_epochs_keeps_init():
    h = np.random.default_rng(0).normal(size=(3, 4))
    a = fit_probe([h], [_path_gold(3)], rank=2, epochs=0, seed=5)
    b = fit_probe([h], [_path_gold(3)], rank=2, epochs=0, seed=5)
    assert np.array_equal(a.B, b.B) and np.all(np.abs(a.B) <= 0.05)


def test_rank_bounds():
    with pytest.raises(ShapeMismatch):
        fit_probe([np.zeros((3, 4))], [_path_gold(3)], rank=5)


def _random_programs(n=40, seed=0):
    rng = np.random.default_rng(seed)
    pairs = build_corpus(CorpusManifest(seed=seed, programs=n))
    embs = [rng.normal(size=(len(p.tokens), 8)) for p in pairs]
    return pairs, embs, [gold_tree(p.buggy)[1] for p in pairs]


def test_fit_improves_and_is_deterministic():
    _, embs, dists = _random_programs()
    a = fit_probe(embs, dists, rank=4, epochs=5, seed=1)
    b = fit_probe(embs, dists, rank=4, epochs=5, seed=1)
    assert np.array_equal(a.B, b.B)
    init = fit_probe(embs, dists, rank=4, epochs=0, seed=1)
    assert a.final_loss <= probe_loss(init.B, embs, dists)


def test_loss_invariant_under_rotation():
    _, embs, dists = _random_programs(10)
    B = fit_probe(embs, dists, rank=4, epochs=3, seed=0).B
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(4, 4)))
    assert np.isclose(probe_loss(q @ B, embs, dists), probe_loss(B, embs, dists), rtol=1e-10)


def test_rank_64_fits_at_least_as_well_as_rank_1():
    _, embs, dists = _random_programs(30)
    embs = [np.concatenate([e] * 8, axis=1) for e in embs]  # H = 64
    one = fit_probe(embs, dists, rank=1, epochs=10, seed=0)
    full = fit_probe(embs, dists, rank=64, epochs=10, seed=0)
    assert full.final_loss <= one.final_loss


def test_reconstruct_examples():
    assert reconstruct_tree(_path_gold(3)) == [(0, 1), (1, 2)]
    assert reconstruct_tree(np.zeros((1, 1))) == []


@given(st.integers(1, 12), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_reconstruct_is_spanning_tree(n, seed):
    w = np.random.default_rng(seed).random((n, n))
    edges = reconstruct_tree(w + w.T)
    assert len(edges) == n - 1
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for i, j in edges:
            for a, b in ((i, j), (j, i)):
                if a == u and b not in seen:
                    seen.add(b)
                    stack.append(b)
    assert len(seen) == n


SHORT = ["1", "1 + 2", "f x", "(1, 2)", "[1; 2]", "x :: xs", "fun x -> x", "f x y", "1 + 2 * 3",
         "let x = 3", "not true", "if b then 1 else 2"]


def _spanning_trees(n):
    pairs = list(itertools.combinations(range(n), 2))
    for cand in itertools.combinations(pairs, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        ok = True
        for i, j in cand:
            ri, rj = find(i), find(j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if ok:
            yield cand


@pytest.mark.parametrize("src", [s for s in SHORT if len(tokenize(s)) <= 6])
def test_exact_distances_recover_gold_tree(src):
    root = parse(tokenize(src))
    n = len(tokenize(src))
    dist = tree_distance_matrix(root).astype(np.float64)
    gold = sorted(tuple(sorted(e)) for e in gold_edges(root))
    assert reconstruct_tree(dist) == gold
    # the gold tree is the unique minimum over every spanning tree
    weights = {t: sum(dist[i, j] for i, j in t) for t in _spanning_trees(n)}
    best = min(weights.values())
    assert [sorted(t) for t, w in weights.items() if w == best] == [gold]


def test_uuas_examples():
    gold = [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert uuas(gold, gold) == 1.0
    assert uuas([(1, 0), (2, 1)], gold[:2]) == 1.0
    assert uuas([(0, 4), (0, 2)], gold[:1]) == 0.0
    assert uuas([(0, 1), (1, 2), (0, 3), (0, 4)], gold) == 0.5
    with pytest.raises(EmptyGold):
        uuas([], [])


def test_middle_layer():
    assert middle_layer(4) == 2 and middle_layer(2) == 1 and middle_layer(1) == 1


def test_probe_report_same_checkpoint_twice():
    pairs = build_corpus(CorpusManifest(seed=1, programs=30))
    cfg = ModelConfig(layers=2, hidden=16, heads=2)
    p = init_params(cfg, 0)
    rep = probe_report((cfg, p), (cfg, p), pairs[:20], pairs[20:], rank=4, epochs=2)
    assert rep["mean_uuas"] == rep["control_mean_uuas"]
    assert rep["mean_loss"] == rep["control_mean_loss"]
    assert len(rep["samples"]) == 5 and rep["layer"] == 1
    s = rep["samples"][0]
    assert len(s["pred_edges"]) == len(s["gold_edges"])
