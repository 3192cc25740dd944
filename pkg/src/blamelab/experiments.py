"""End-to-end experiments at desk scale.

Each ``run_*`` function returns a JSON-ready report. Trained models and
corpora are memoized in-process so experiments that share a model (the
baseline comparison, the threshold sweep and the probe all use the same Small
transformers) train it once; ``clear_cache`` forces a cold rerun.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import CorpusManifest, ProgramPair, build_corpus, generate_sources
from .corpus.build import DEFAULT_TEST_FAMILIES
from .corpus import diff_labels
from .lang import TypeErrorReport, compiler_blame, infer, parse, tokenize
from .metric import corpus_accuracy, iou_accuracy, threshold_sweep, top_k_hit
from .neural.config import ModelConfig, TrainConfig, preset
from .neural.gradcheck import PRIMITIVES, check_model_loss, check_primitive
from .neural.model import init_params, predict
from .neural.train import finetune, pretrain_mlm
from .neural.vocab import DEFAULT_VOCAB
from .probe import middle_layer, probe_report


@dataclass(frozen=True)
class Budget:
    """Every knob of the desk-scale experiments."""

    corpus_seed: int = 7
    programs: int = 2000
    seeds: tuple[int, ...] = (0, 1, 2)
    epochs: int = 6
    learning_rate: float = 1e-3
    # chosen per architecture on a validation slice of the training split
    bilstm_learning_rate: float = 3e-2
    batch_size: int = 32
    threshold: float = 0.5
    bilstm_layers: int = 2
    bilstm_hidden: int = 128
    pretrain_sources: int = 2000
    pretrain_epochs: int = 10
    pretrain_finetune_epochs: int = 30
    pretrain_finetune_pairs: int = 200
    probe_rank: int = 64
    probe_epochs: int = 40
    probe_test: int = 200
    thresholds: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7)
    test_families: tuple[str, ...] = tuple(DEFAULT_TEST_FAMILIES)

    def train_config(self, seed: int, epochs: Optional[int] = None, size: str = "small") -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            learning_rate=self.bilstm_learning_rate if size == "bilstm" else self.learning_rate,
            epochs=self.epochs if epochs is None else epochs,
            seed=seed,
        )


def model_config(size: str, budget: Budget) -> ModelConfig:
    if size == "bilstm":
        return ModelConfig(arch="bilstm", layers=budget.bilstm_layers, hidden=budget.bilstm_hidden)
    return preset(size)


_CACHE: dict = {}


def clear_cache() -> None:
    _CACHE.clear()


def _memo(key, fn):
    if key not in _CACHE:
        _CACHE[key] = fn()
    return _CACHE[key]


def corpus(budget: Budget) -> list[ProgramPair]:
    manifest = CorpusManifest(seed=budget.corpus_seed, programs=budget.programs)
    return _memo(("corpus", budget.corpus_seed, budget.programs), lambda: build_corpus(manifest))


def split(pairs) -> tuple[list[ProgramPair], list[ProgramPair]]:
    return [p for p in pairs if p.split == "train"], [p for p in pairs if p.split == "test"]


def encode_pairs(pairs) -> list[np.ndarray]:
    return [DEFAULT_VOCAB.encode(p.tokens) for p in pairs]


def train_blame_model(cfg: ModelConfig, pairs, tcfg: TrainConfig, init=None) -> dict:
    return finetune(encode_pairs(pairs), [p.labels for p in pairs], cfg, tcfg, init=init).params


def _trained(size: str, seed: int, budget: Budget, subset: str = "random"):
    """A model fine-tuned on the random-split training set (``subset='random'``)
    or on its in-family part only (``subset='in-family'``)."""

    def build():
        train, _ = split(corpus(budget))
        if subset == "in-family":
            train = [p for p in train if p.family not in budget.test_families]
        return train_blame_model(model_config(size, budget), train, budget.train_config(seed, size=size))

    return _memo(("model", size, seed, subset, budget), build)


def model_predictions(size: str, seed: int, budget: Budget, pairs, subset: str = "random"):
    return predict(_trained(size, seed, budget, subset), model_config(size, budget), encode_pairs(pairs))


def compiler_predictions(pairs) -> list[np.ndarray]:
    return [compiler_blame(p.buggy).astype(np.float64) for p in pairs]


def _mean(xs) -> float:
    return float(np.mean(xs))


def _sd(xs) -> float:
    return float(np.std(xs, ddof=1)) if len(xs) > 1 else 0.0


def _seed_block(values: list[float], seeds) -> dict:
    return {"per_seed": {str(s): v for s, v in zip(seeds, values)}, "mean": _mean(values), "sd": _sd(values)}


def _seeded_iou(size: str, budget: Budget, test) -> list[float]:
    return [
        corpus_accuracy(test, model_predictions(size, s, budget, test), budget.threshold)["mean_iou"]
        for s in budget.seeds
    ]


def _set_iou(p, l) -> float:
    ps = {i for i, b in enumerate(p) if b}
    ls = {i for i, b in enumerate(l) if b}
    return 1.0 if not ps | ls else len(ps & ls) / len(ps | ls)


def _set_top_k(probs, l, k) -> int:
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))[:k]
    return int(any(l[i] for i in order))


def run_metric_oracle(cases: int = 1000, seed: int = 0) -> dict:
    """Bit-vector metrics against explicit index-set arithmetic."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    iou_bad = top_bad = zero_cases = 0
    for c in range(cases):
        n = int(rng.integers(1, 40))
        # every tenth case is all-zero on one or both sides
        p = rng.integers(0, 2, n) * (c % 10 != 0)
        l = rng.integers(0, 2, n) * (c % 20 != 0)
        zero_cases += int(not p.any() or not l.any())
        probs = np.round(rng.random(n), 1)  # coarse values force ties
        k = int(rng.integers(1, 5))
        iou_bad += int(iou_accuracy(p, l) != _set_iou(p, l))
        top_bad += int(top_k_hit(probs, l, k) != _set_top_k(list(probs), list(l), k))
    return {"cases": cases, "zero_cases": zero_cases, "iou_mismatches": iou_bad, "top_k_mismatches": top_bad,
            "_seconds": time.perf_counter() - t0}


def run_gradient_checks(seed: int = 0) -> dict:
    t0 = time.perf_counter()
    out = {"primitives": {name: check_primitive(name, seed) for name in sorted(PRIMITIVES)}}
    models = {
        "transformer_tiny": preset("tiny"),
        "bilstm_1layer": ModelConfig(arch="bilstm", layers=1, hidden=128),
    }
    for name, cfg in models.items():
        for objective in ("classification", "mlm"):
            out[f"{name}.{objective}"] = check_model_loss(cfg, objective, seed)
    out["max_error"] = max(max(out["primitives"].values()), *(v for k, v in out.items() if "." in k))
    out["_seconds"] = time.perf_counter() - t0
    return out


def _typechecks(source: str) -> bool:
    return not isinstance(infer(parse(tokenize(source))), TypeErrorReport)


def run_front_end(budget: Budget = Budget()) -> dict:
    """Seed programs type-check, mutants do not, and the diff recovers the mutation site."""
    pairs = corpus(budget)
    seeds_ok = sum(_typechecks(p.fixed) for p in pairs)
    mutants_bad = sum(not _typechecks(p.buggy) for p in pairs)
    misses: dict[str, int] = {}
    for p in pairs:
        if not np.all(diff_labels(p.buggy, p.fixed) >= np.asarray(p.labels)):
            misses[p.mutation["op"]] = misses.get(p.mutation["op"], 0) + 1
    n = len(pairs)
    return {
        "programs": n,
        "seed_typecheck_rate": seeds_ok / n,
        "mutant_reject_rate": mutants_bad / n,
        "diff_recovery_rate": 1 - sum(misses.values()) / n,
        "diff_misses_by_operator": dict(sorted(misses.items())),
    }


def run_baseline_ordering(budget: Budget = Budget()) -> dict:
    """Small transformer vs BiLSTM vs compiler blame on the random split."""
    t0 = time.perf_counter()
    _, test = split(corpus(budget))
    compiler = corpus_accuracy(test, compiler_predictions(test), budget.threshold)
    small = _seeded_iou("small", budget, test)
    bilstm = _seeded_iou("bilstm", budget, test)
    return {
        "test_programs": len(test),
        "compiler": {"mean_iou": compiler["mean_iou"], "top3_rate": compiler["top3_rate"]},
        "transformer_small": _seed_block(small, budget.seeds),
        "bilstm": _seed_block(bilstm, budget.seeds),
        "_seconds": time.perf_counter() - t0,
    }


def run_size_trend(budget: Budget = Budget()) -> dict:
    _, test = split(corpus(budget))
    return {
        "transformer_tiny": _seed_block(_seeded_iou("tiny", budget, test), budget.seeds),
        "transformer_small": _seed_block(_seeded_iou("small", budget, test), budget.seeds),
    }


def run_pretraining_benefit(budget: Budget = Budget(), size: str = "tiny") -> dict:
    """MLM pretraining then fine-tuning vs fine-tuning from fresh weights, on
    an identical labelled subset and epoch budget."""
    train, test = split(corpus(budget))
    labelled = train[: budget.pretrain_finetune_pairs]
    sources = generate_sources(budget.pretrain_sources, budget.corpus_seed)
    enc_src = [DEFAULT_VOCAB.encode([t.text for t in tokenize(s)]) for s in sources]
    cfg = model_config(size, budget)
    enc_test = encode_pairs(test)
    pre_iou, fresh_iou, mlm_first, mlm_last = [], [], [], []
    for s in budget.seeds:
        pre = pretrain_mlm(enc_src, cfg, budget.train_config(s, budget.pretrain_epochs))
        mlm_first.append(pre.history[0]["loss"])
        mlm_last.append(pre.history[-1]["loss"])
        tcfg = budget.train_config(s, budget.pretrain_finetune_epochs)
        for init, out in ((pre.params, pre_iou), (None, fresh_iou)):
            params = train_blame_model(cfg, labelled, tcfg, init=init)
            out.append(corpus_accuracy(test, predict(params, cfg, enc_test), budget.threshold)["mean_iou"])
    return {
        "model": f"transformer_{size}",
        "finetune_pairs": len(labelled),
        "pretrain_sources": len(sources),
        "mlm_loss_first_epoch": _seed_block(mlm_first, budget.seeds),
        "mlm_loss_last_epoch": _seed_block(mlm_last, budget.seeds),
        "pretrained": _seed_block(pre_iou, budget.seeds),
        "fresh": _seed_block(fresh_iou, budget.seeds),
    }


def _mean_sweep(size: str, budget: Budget, test) -> list[float]:
    rows = [threshold_sweep(test, model_predictions(size, s, budget, test), budget.thresholds) for s in budget.seeds]
    return [_mean([r[i][1] for r in rows]) for i in range(len(budget.thresholds))]


def run_threshold_robustness(budget: Budget = Budget()) -> dict:
    _, test = split(corpus(budget))
    out = {"thresholds": list(budget.thresholds)}
    for name, size in (("transformer_small", "small"), ("bilstm", "bilstm")):
        curve = _mean_sweep(size, budget, test)
        out[name] = {"mean_iou": curve, "variation": max(curve) - min(curve)}
    return out


def run_generalization(budget: Budget = Budget()) -> dict:
    """Train on families A; compare in-family and held-out-family accuracy.

    Both evaluation sets come from the test split, so no evaluated program
    was seen in training.
    """
    _, test = split(corpus(budget))
    held = set(budget.test_families)
    in_fam = [p for p in test if p.family not in held]
    cross = [p for p in test if p.family in held]
    out = {"train_families": sorted({p.family for p in test} - held), "test_families": sorted(held),
           "in_family_programs": len(in_fam), "cross_family_programs": len(cross)}
    for name, size in (("transformer_small", "small"), ("bilstm", "bilstm")):
        ins, crs = [], []
        for s in budget.seeds:
            ins.append(corpus_accuracy(in_fam, model_predictions(size, s, budget, in_fam, "in-family"))["mean_iou"])
            crs.append(corpus_accuracy(cross, model_predictions(size, s, budget, cross, "in-family"))["mean_iou"])
        out[name] = {"in_family": _mean(ins), "cross_family": _mean(crs), "drop": _mean(ins) - _mean(crs)}
    return out


def run_probe_signal(budget: Budget = Budget(), size: str = "small") -> dict:
    """Probe the middle layer of the seed-0 fine-tuned transformer against a
    randomly initialized one of the same shape."""
    train, test = split(corpus(budget))
    cfg = model_config(size, budget)
    seed = budget.seeds[0]
    report = probe_report(
        (cfg, _trained(size, seed, budget)),
        (cfg, init_params(cfg, seed)),
        train,
        test[: budget.probe_test],
        layer=middle_layer(cfg.layers),
        rank=budget.probe_rank,
        epochs=budget.probe_epochs,
        seed=seed,
        model_name=f"transformer_{size}_finetuned_seed{seed}",
        control_name=f"transformer_{size}_random_seed{seed}",
    )
    return report


def canonical(report: dict) -> bytes:
    """Stable bytes for comparing reports; keys starting with ``_`` (timings) are dropped."""

    def strip(x):
        if isinstance(x, dict):
            return {k: strip(v) for k, v in x.items() if not k.startswith("_")}
        if isinstance(x, list):
            return [strip(v) for v in x]
        return x

    return json.dumps(strip(report), sort_keys=True).encode()
