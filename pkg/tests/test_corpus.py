import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blamelab.corpus import (
    FAMILIES,
    OPERATORS,
    CorpusManifest,
    FormatError,
    NoViableMutation,
    build_corpus,
    diff_labels,
    generate_seed_program,
    load_jsonl,
    mutate,
    save_jsonl,
)
from blamelab.lang import TypeErrorReport, infer, parse, tokenize

SUM_LIST_BUGGY = """let rec sumList xs =
  match xs with
  | [] -> []
  | h :: t ->
    h + sumList t"""
SUM_LIST_FIXED = SUM_LIST_BUGGY.replace("| [] -> []", "| [] -> 0")


def typechecks(src):
    return not isinstance(infer(parse(tokenize(src))), TypeErrorReport)


def test_at_least_five_families():
    assert len(FAMILIES) >= 5
    assert {"int_to_nil", "nil_to_int", "swap_plus_cons", "drop_arg", "swap_branches", "replace_var"} <= set(OPERATORS)


def test_list_fold_seed0_is_a_recursion():
    src = generate_seed_program("list_fold", 0)
    assert src.startswith("let rec") and "match" in src
    assert typechecks(src)
    assert generate_seed_program("list_fold", 0) == src


@given(st.sampled_from(sorted(FAMILIES)), st.integers(0, 100_000))
@settings(max_examples=80, deadline=None)
def test_seed_programs_typecheck(family, seed):
    src = generate_seed_program(family, seed)
    assert typechecks(src)
    assert len(tokenize(src)) <= 96


def test_int_to_nil_in_sumlist_labels_only_the_nil():
    for seed in range(200):
        m = mutate(SUM_LIST_FIXED, seed)
        if m.op == "int_to_nil":
            break
    else:
        pytest.fail("no int_to_nil mutation found")
    assert m.source == SUM_LIST_BUGGY
    toks = tokenize(m.source)
    assert [(toks[i].text, toks[i].line) for i in np.flatnonzero(m.labels)] == [("[]", 3)]


def test_rebound_to_bool_labels_the_true():
    src = "let x = 1 in x + 2"
    for seed in range(40):
        m = mutate(src, seed)
        if m.op == "int_to_bool" and m.source.startswith("let x = true"):
            break
    else:
        pytest.fail("no int_to_bool mutation on the binding")
    toks = tokenize(m.source)
    assert [toks[i].text for i in np.flatnonzero(m.labels)] == ["true"]


def test_no_viable_mutation():
    with pytest.raises(NoViableMutation):
        mutate("fun x -> x", 0)


@given(st.sampled_from(sorted(FAMILIES)), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_mutants_are_ill_typed_and_labelled(family, seed):
    src = generate_seed_program(family, seed)
    try:
        m = mutate(src, seed)
    except NoViableMutation:
        return
    assert not typechecks(m.source)
    toks = tokenize(m.source)
    assert len(m.labels) == len(toks) and m.labels.sum() >= 1
    assert 0 <= m.span[0] <= m.span[1] <= len(m.source.encode())


def test_diff_labels_sum_list():
    labels = diff_labels(SUM_LIST_BUGGY, SUM_LIST_FIXED)
    toks = tokenize(SUM_LIST_BUGGY)
    (i,) = np.flatnonzero(labels)
    assert toks[i].text == "[]" and toks[i].line == 3


def test_diff_labels_examples():
    assert diff_labels("1 + 2", "1 + 2").tolist() == [0, 0, 0]
    assert diff_labels("1 + true", "1 + 2").tolist() == [0, 0, 1]


def test_diff_prefers_earlier_buggy_match():
    # buggy "a a" vs fixed "a": the first a is kept
    assert diff_labels("a a", "a").tolist() == [0, 1]


def test_build_is_deterministic(tmp_path):
    m = CorpusManifest(seed=7, programs=100)
    save_jsonl(build_corpus(m), tmp_path / "a.jsonl")
    save_jsonl(build_corpus(m, jobs=2), tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


@given(st.integers(0, 1000), st.booleans())
@settings(max_examples=10, deadline=None)
def test_jsonl_round_trip(seed, multi):
    import tempfile
    from pathlib import Path

    pairs = build_corpus(CorpusManifest(seed=seed, programs=15, multi=multi))
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "c.jsonl"
        save_jsonl(pairs, path)
        assert load_jsonl(path) == pairs


def test_pair_invariants():
    for p in build_corpus(CorpusManifest(programs=120)):
        assert p.tokens == [t.text for t in tokenize(p.buggy)]
        assert len(p.labels) == len(p.tokens) and sum(p.labels) >= 1
        lo, hi = p.mutation["span"]
        assert 0 <= lo <= hi <= len(p.buggy.encode())
        assert not typechecks(p.buggy) and typechecks(p.fixed)


def test_splits_sum_and_cross_family_partition():
    pairs = build_corpus(CorpusManifest(programs=200, split_mode="cross-family"))
    fam = {s: {p.family for p in pairs if p.split == s} for s in ("train", "test")}
    assert fam["train"] and fam["test"] and not fam["train"] & fam["test"]
    pairs = build_corpus(CorpusManifest(programs=200))
    c = Counter(p.split for p in pairs)
    assert c["train"] + c["test"] == 200 and c["test"] > 0


def test_multi_mutations():
    pairs = build_corpus(CorpusManifest(programs=60, multi=True))
    assert any(p.mutation["op"].count("+") >= 1 for p in pairs)


def test_format_error_line_numbers(tmp_path):
    good = build_corpus(CorpusManifest(programs=2))[0].to_json()
    path = tmp_path / "bad.jsonl"
    path.write_text(good + "\n" + "{not json\n")
    with pytest.raises(FormatError) as err:
        load_jsonl(path)
    assert err.value.line == 2
    obj = json.loads(good)
    obj["labels"] = obj["labels"][:-1]
    path.write_text(good + "\n" + good + "\n" + json.dumps(obj) + "\n")
    with pytest.raises(FormatError) as err:
        load_jsonl(path)
    assert err.value.line == 3


def test_diff_recovers_mutation_sites():
    pairs = build_corpus(CorpusManifest(programs=2000))
    misses = Counter()
    for p in pairs:
        if not np.all(diff_labels(p.buggy, p.fixed) >= np.array(p.labels)):
            misses[p.mutation["op"]] += 1
    rate = 1 - sum(misses.values()) / len(pairs)
    print(f"diff recovers the mutation site on {rate:.3f} of mutants; misses by operator: {dict(misses)}")
    assert rate >= 0.95
