import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from blamelab.corpus import ProgramPair
from blamelab.metric import (
    LengthMismatch,
    binarize,
    corpus_accuracy,
    iou_accuracy,
    threshold_sweep,
    top_k_hit,
)


def pair(pid, labels):
    n = len(labels)
    return ProgramPair(pid, "", None, ["x"] * n, list(labels), "test", "f")


def bits_at(n, idx):
    v = np.zeros(n, dtype=np.int8)
    v[list(idx)] = 1
    return v


def test_binarize_examples():
    assert binarize([0.6, 0.4, 0.5], 0.5).tolist() == [1, 0, 0]
    assert binarize([0.0] * 4).tolist() == [0] * 4
    assert binarize([0.6, 0.4, 0.5], 0.3).tolist() == [1, 1, 1]
    assert binarize([0.6, 0.4, 0.5], 0.7).tolist() == [0, 0, 0]


def test_binarize_rejects_bad_input():
    with pytest.raises(ValueError):
        binarize([0.5], 1.0)
    with pytest.raises(ValueError):
        binarize([1.5], 0.5)
    with pytest.raises(ValueError):
        binarize([float("nan")], 0.5)


def test_iou_examples():
    assert iou_accuracy([1, 0, 1], [1, 0, 1]) == 1.0
    assert iou_accuracy(bits_at(6, [1, 3]), bits_at(6, [3, 5])) == pytest.approx(1 / 3)
    assert iou_accuracy(np.ones(100), bits_at(100, [1, 2, 3, 4])) == pytest.approx(0.04)
    assert iou_accuracy([0, 0, 0], [0, 1, 0]) == 0.0
    assert iou_accuracy([0, 0], [0, 0]) == 1.0
    with pytest.raises(LengthMismatch):
        iou_accuracy([1], [1, 0])


def test_top_k_examples():
    assert top_k_hit([0.9, 0.1, 0.8, 0.2], [0, 0, 1, 0], 3) == 1
    assert top_k_hit([0.9, 0.1, 0.8, 0.2], [0, 0, 0, 0], 3) == 0
    # five separate error tokens: three picks cannot see them all
    probs = np.linspace(0.9, 0.1, 10)
    labels = bits_at(10, [0, 2, 4, 6, 8])
    assert top_k_hit(probs, labels, 3) == 1
    picked = np.argsort(-probs, kind="stable")[:3]
    assert labels[picked].sum() < labels.sum()
    # ties go to the lower index
    assert top_k_hit([0.5, 0.5, 0.5], [0, 0, 1], 2) == 0


def test_corpus_accuracy_examples():
    one = corpus_accuracy([pair("a", [1, 0])], [[0.9, 0.1]])
    assert one["mean_iou"] == 1.0
    two = corpus_accuracy([pair("a", [1, 0]), pair("b", [1, 0])], [[0.9, 0.1], [0.1, 0.9]])
    assert two["mean_iou"] == 0.5
    assert [r["id"] for r in two["per_program"]] == ["a", "b"]
    swapped = corpus_accuracy([pair("b", [1, 0]), pair("a", [1, 0])], [[0.1, 0.9], [0.9, 0.1]])
    assert swapped == two
    with pytest.raises(LengthMismatch):
        corpus_accuracy([pair("a", [1, 0])], [[0.9]])


def test_threshold_sweep_examples():
    ps = [pair("a", [1, 1, 1]), pair("b", [0, 1, 0])]
    ts = [0.1, 0.3, 0.5, 0.7, 0.9]
    assert all(v == 1.0 for _, v in threshold_sweep(ps[:1], [[1.0, 1.0, 1.0]], ts))
    assert all(v == 1.0 for _, v in threshold_sweep(ps, [[1.0, 1.0, 1.0], [0.0, 1.0, 0.0]], ts))
    with pytest.raises(ValueError):
        threshold_sweep(ps, [[1.0] * 3, [1.0] * 3], [0.5, 0.5])


def _brute_iou(p, l):
    ps = {i for i, b in enumerate(p) if b}
    ls = {i for i, b in enumerate(l) if b}
    return 1.0 if not ps | ls else len(ps & ls) / len(ps | ls)


bitvecs = st.integers(1, 40).flatmap(
    lambda n: st.tuples(
        hnp.arrays(np.int8, n, elements=st.integers(0, 1)),
        hnp.arrays(np.int8, n, elements=st.integers(0, 1)),
    )
)


@given(bitvecs)
@settings(max_examples=300)
def test_iou_properties(pl):
    p, l = pl
    v = iou_accuracy(p, l)
    assert 0.0 <= v <= 1.0
    assert v == iou_accuracy(l, p)
    assert (v == 1.0) == bool(np.array_equal(p, l))
    assert v == _brute_iou(p, l)


def test_iou_brute_force_thousand_cases():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        p, l = rng.integers(0, 2, n), rng.integers(0, 2, n)
        assert iou_accuracy(p, l) == _brute_iou(p, l)


probs = hnp.arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 1))


@given(probs, st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_binarize_antitone(p, t1, t2):
    lo, hi = sorted((t1, t2))
    assert np.all(binarize(p, lo) >= binarize(p, hi))


@given(probs, st.integers(0, 1000))
def test_top_k_monotone(p, seed):
    l = np.random.default_rng(seed).integers(0, 2, len(p))
    hits = [top_k_hit(p, l, k) for k in range(1, len(p) + 2)]
    assert hits == sorted(hits)


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_sweep_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    ps, preds = [], []
    for i in range(5):
        n = int(rng.integers(1, 12))
        ps.append(pair(f"p{i}", rng.integers(0, 2, n)))
        preds.append(rng.random(n))
    ts = [0.2, 0.5, 0.8]
    expect = [np.mean([_brute_iou(pr > t, p.labels) for p, pr in zip(ps, preds)]) for t in ts]
    got = [v for _, v in threshold_sweep(ps, preds, ts)]
    assert got == pytest.approx(expect, abs=0)
