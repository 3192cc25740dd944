"""The ten acceptance criteria at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line (also collected into the terminal
summary). Reports are kept so the last criterion can rerun everything from a
cold cache and compare bytes.
"""
import itertools

import numpy as np
import pytest

from blamelab import experiments as X
from blamelab.lang import parse, tokenize, tree_distance_matrix
from blamelab.probe import reconstruct_tree

from conftest import VERDICTS

pytestmark = pytest.mark.slow

BUDGET = X.Budget()
REPORTS: dict = {}


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    VERDICTS.append(line)
    assert ok, line


def _short_programs():
    """Every distinct program of at most 6 tokens built from a small grammar sample."""
    atoms = ["1", "x", "true", "[]"]
    forms = [
        "{a}", "{a} + {b}", "{a} :: {b}", "f {a}", "f {a} {b}", "({a}, {b})", "[{a}; {b}]", "[{a}]",
        "fun y -> {a}", "let y = {a}", "not {a}", "{a} < {b}", "({a})", "- {a}", "{a} && {b}",
    ]
    out = set()
    for form in forms:
        for a, b in itertools.product(atoms, repeat=2):
            src = form.format(a=a, b=b)
            try:
                toks = tokenize(src)
                parse(toks)
            except Exception:
                continue
            if len(toks) <= 6:
                out.add(src)
    return sorted(out)


def _spanning_tree_minima(dist):
    n = dist.shape[0]
    pairs = list(itertools.combinations(range(n), 2))
    best, winners = None, []
    for cand in itertools.combinations(pairs, n - 1):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        acyclic = True
        for i, j in cand:
            ri, rj = find(i), find(j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if not acyclic:
            continue
        w = sum(dist[i, j] for i, j in cand)
        if best is None or w < best:
            best, winners = w, [list(cand)]
        elif w == best:
            winners.append(list(cand))
    return winners


def test_criterion_1_metric_oracle():
    r = X.run_metric_oracle()
    REPORTS[1] = r
    ok = r["iou_mismatches"] == 0 and r["top_k_mismatches"] == 0 and r["zero_cases"] > 0 and r["_seconds"] < 1.0
    verdict(1, ok, f"{r['cases']} cases, {r['iou_mismatches']} IoU and {r['top_k_mismatches']} top-k mismatches, "
                   f"{r['_seconds']:.3f}s")


def test_criterion_2_gradient_integrity():
    r = X.run_gradient_checks()
    REPORTS[2] = r
    ok = r["max_error"] <= 1e-3 and r["_seconds"] < 120
    verdict(2, ok, f"max relative error {r['max_error']:.2e} over {len(r['primitives'])} primitives "
                   f"and 4 end-to-end losses, {r['_seconds']:.1f}s")


def test_criterion_3_front_end():
    r = X.run_front_end(BUDGET)
    REPORTS[3] = r
    ok = r["seed_typecheck_rate"] == 1.0 and r["mutant_reject_rate"] == 1.0 and r["diff_recovery_rate"] >= 0.95
    verdict(3, ok, f"seeds type-check {r['seed_typecheck_rate']:.3f}, mutants rejected {r['mutant_reject_rate']:.3f}, "
                   f"diff recovery {r['diff_recovery_rate']:.3f} (misses {r['diff_misses_by_operator']})")


def test_criterion_4_baseline_ordering():
    r = X.run_baseline_ordering(BUDGET)
    REPORTS[4] = r
    small, comp, lstm = r["transformer_small"]["mean"], r["compiler"]["mean_iou"], r["bilstm"]["mean"]
    ok = small >= comp + 0.10 and small >= lstm and r["_seconds"] <= 1800
    verdict(4, ok, f"small {small:.3f} vs compiler {comp:.3f} and bilstm {lstm:.3f}, {r['_seconds']:.0f}s")


def test_criterion_5_size_trend():
    r = X.run_size_trend(BUDGET)
    REPORTS[5] = r
    small, tiny = r["transformer_small"]["mean"], r["transformer_tiny"]["mean"]
    verdict(5, small >= tiny - 0.01, f"small {small:.3f} vs tiny {tiny:.3f}")


def test_criterion_6_pretraining_benefit():
    r = X.run_pretraining_benefit(BUDGET)
    REPORTS[6] = r
    pre, fresh = r["pretrained"]["mean"], r["fresh"]["mean"]
    verdict(6, pre >= fresh, f"pretrained {pre:.3f} vs fresh {fresh:.3f} "
                            f"(MLM loss {r['mlm_loss_first_epoch']['mean']:.2f} -> {r['mlm_loss_last_epoch']['mean']:.2f})")


def test_criterion_7_threshold_robustness():
    r = X.run_threshold_robustness(BUDGET)
    REPORTS[7] = r
    var = r["transformer_small"]["variation"]
    verdict(7, var <= 0.10, f"transformer variation {var:.3f}, bilstm variation {r['bilstm']['variation']:.3f}")


def test_criterion_8_generalization():
    r = X.run_generalization(BUDGET)
    REPORTS[8] = r
    t, b = r["transformer_small"], r["bilstm"]
    verdict(8, t["drop"] < b["drop"], f"transformer drop {t['drop']:.3f} ({t['in_family']:.3f} -> {t['cross_family']:.3f}), "
                                     f"bilstm drop {b['drop']:.3f} ({b['in_family']:.3f} -> {b['cross_family']:.3f})")


def probe_signal_report() -> dict:
    exact = []
    for src in _short_programs():
        dist = tree_distance_matrix(parse(tokenize(src))).astype(np.float64)
        rec = [list(e) for e in reconstruct_tree(dist)]
        # the reconstruction must be the unique minimum over all spanning trees
        exact.append([sorted(map(list, w)) for w in _spanning_tree_minima(dist)] == [rec])
    r = X.run_probe_signal(BUDGET)
    r["exact_reconstruction"] = {"programs": len(exact), "recovered": sum(exact)}
    return r


def test_criterion_9_probe_signal():
    r = REPORTS[9] = probe_signal_report()
    signal = r["mean_uuas"] >= r["control_mean_uuas"] + 0.05
    ex = r["exact_reconstruction"]
    verdict(9, signal and ex["recovered"] == ex["programs"],
            f"fine-tuned UUAS {r['mean_uuas']:.3f} vs random-init control {r['control_mean_uuas']:.3f} "
            f"(needs +0.05); exact reconstruction {ex['recovered']}/{ex['programs']} programs of <= 6 tokens")


RUNNERS = {
    1: X.run_metric_oracle,
    2: X.run_gradient_checks,
    3: lambda: X.run_front_end(BUDGET),
    4: lambda: X.run_baseline_ordering(BUDGET),
    5: lambda: X.run_size_trend(BUDGET),
    6: lambda: X.run_pretraining_benefit(BUDGET),
    7: lambda: X.run_threshold_robustness(BUDGET),
    8: lambda: X.run_generalization(BUDGET),
    9: probe_signal_report,
}


def test_criterion_10_reproducibility():
    missing = sorted(set(RUNNERS) - set(REPORTS))
    if missing:
        pytest.skip(f"criteria {missing} did not produce reports in this session")
    X.clear_cache()
    differ = []
    for n, fn in RUNNERS.items():
        again = fn()
        if X.canonical(again) != X.canonical(REPORTS[n]):
            differ.append(n)
    verdict(10, not differ, f"cold rerun of criteria 1-9: {'all byte-identical' if not differ else f'differ {differ}'}")
