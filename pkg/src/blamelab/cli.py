"""Command-line entry point: ``blamelab <command> [options]``.

Every option can also come from a JSON ``--config`` file (keys are the
option names with dashes replaced by underscores); explicit flags win over
the file, and the file wins over built-in defaults. Each command writes its
artifact plus ``runconfig.json`` (the fully resolved options) to ``--out``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import CorpusManifest, FormatError, build_corpus, generate_sources, load_jsonl, save_jsonl, summarize
from .corpus.build import atomic_write_text
from .corpus.templates import GeneratorBug
from .lang import tokenize
from .metric import corpus_accuracy, make_report, threshold_sweep
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.config import PRESETS, ConfigError, ModelConfig, TrainConfig
from .neural.errors import CheckpointMismatch, DivergenceError, ShapeMismatch
from .neural.model import init_params, predict
from .neural.train import finetune, pretrain_mlm
from .neural.vocab import DEFAULT_VOCAB, TooLong

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVALID = 0, 2, 3, 4


class UsageError(Exception):
    pass


_MODEL_DEFAULTS = {
    "preset": "tiny",
    "arch": None,
    "layers": None,
    "hidden": None,
    "heads": None,
    "max_len": 128,
    "dropout": 0.1,
    "ffn_mult": 4,
}
_TRAIN_DEFAULTS = {
    "batch_size": 32,
    "learning_rate": 3e-5,
    "epochs": None,
    "scheduler": "linear_warmup_decay",
    "warmup_frac": 0.1,
    "mask_rate": 0.15,
    "clip_norm": 1.0,
}

DEFAULTS = {
    "gen": {
        "programs": 2000,
        "families": None,
        "split_mode": "random",
        "test_fraction": 0.2,
        "test_families": None,
        "multi": False,
        "max_len": 96,
        "jobs": 1,
    },
    "pretrain": {**_MODEL_DEFAULTS, **_TRAIN_DEFAULTS, "sources": 2000, "corpus": None, "epochs": 10},
    "finetune": {**_MODEL_DEFAULTS, **_TRAIN_DEFAULTS, "init": "none", "epochs": 30},
    "eval": {
        **_MODEL_DEFAULTS,
        **_TRAIN_DEFAULTS,
        "checkpoint": None,
        "seeds": None,
        "threshold": 0.5,
        "split": "test",
        "epochs": 30,
    },
    "baseline": {
        **_MODEL_DEFAULTS,
        **_TRAIN_DEFAULTS,
        "kind": "compiler",
        "seeds": 1,
        "threshold": 0.5,
        "split": "test",
        "epochs": 30,
        "layers": 2,
        "hidden": 128,
    },
    "sweep": {"thresholds": [0.3, 0.4, 0.5, 0.6, 0.7], "split": "test"},
    "probe": {"control": "random", "layer": None, "rank": 64, "epochs": 40, "max_train": None, "max_test": None,
              "split": "test"},
    "report": {},
}


def _seed_default() -> int:
    env = os.environ.get("BLAMELAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BLAMELAB_SEED must be an integer, got {env!r}") from None


# -- argument parsing ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, out_required: bool = True):
    p.add_argument("--config", help="JSON file of option values")
    p.add_argument("--out", help="output directory" + ("" if out_required else " (optional)"))
    p.add_argument("--seed", type=int, help="base seed (default: $BLAMELAB_SEED or 0)")


def _add_model(p):
    g = p.add_argument_group("model")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--arch", choices=["transformer", "bilstm"])
    g.add_argument("--layers", type=int)
    g.add_argument("--hidden", type=int)
    g.add_argument("--heads", type=int)
    g.add_argument("--max-len", type=int)
    g.add_argument("--dropout", type=float)
    g.add_argument("--ffn-mult", type=int)


def _add_train(p):
    g = p.add_argument_group("training")
    g.add_argument("--batch-size", type=int)
    g.add_argument("--learning-rate", "--lr", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--scheduler", choices=["constant", "linear_warmup_decay"])
    g.add_argument("--warmup-frac", type=float)
    g.add_argument("--mask-rate", type=float)
    g.add_argument("--clip-norm", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blamelab", description="Type-error localization laboratory.",
                                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labelled corpus", argument_default=argparse.SUPPRESS)
    _add_common(p)
    p.add_argument("--programs", type=int)
    p.add_argument("--families", nargs="+")
    p.add_argument("--split-mode", choices=["random", "cross-family"])
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--test-families", nargs="+")
    p.add_argument("--multi", action="store_true")
    p.add_argument("--max-len", type=int)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("pretrain", help="masked-token pretraining", argument_default=argparse.SUPPRESS)
    _add_common(p)
    _add_model(p)
    _add_train(p)
    p.add_argument("--sources", type=int, help="number of generated unlabelled programs")
    p.add_argument("--corpus", help="use the fixed programs of this JSONL corpus instead")

    p = sub.add_parser("finetune", help="train a blame model", argument_default=argparse.SUPPRESS)
    _add_common(p)
    _add_model(p)
    _add_train(p)
    p.add_argument("--corpus", help="labelled JSONL corpus (its train split is used)")
    p.add_argument("--init", help="'none' for fresh weights or a checkpoint directory")

    p = sub.add_parser("eval", help="score checkpoints, or train and score N seeds", argument_default=argparse.SUPPRESS)
    _add_common(p)
    _add_model(p)
    _add_train(p)
    p.add_argument("--corpus")
    p.add_argument("--checkpoint", action="append", help="checkpoint directory (repeatable)")
    p.add_argument("--seeds", type=int, help="train this many fresh models (seeds seed..seed+N-1)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--split", choices=["train", "test", "all"])

    p = sub.add_parser("baseline", help="compiler or BiLSTM baseline", argument_default=argparse.SUPPRESS)
    _add_common(p)
    _add_model(p)
    _add_train(p)
    p.add_argument("--corpus")
    p.add_argument("--kind", choices=["compiler", "bilstm"])
    p.add_argument("--seeds", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--split", choices=["train", "test", "all"])

    p = sub.add_parser("sweep", help="mean IoU across thresholds", argument_default=argparse.SUPPRESS)
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--checkpoint")
    p.add_argument("--thresholds", type=float, nargs="+")
    p.add_argument("--split", choices=["train", "test", "all"])

    p = sub.add_parser("probe", help="structural probe vs a control", argument_default=argparse.SUPPRESS)
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--checkpoint")
    p.add_argument("--control", help="checkpoint directory or 'random'")
    p.add_argument("--layer", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--max-train", type=int)
    p.add_argument("--max-test", type=int)
    p.add_argument("--split", choices=["train", "test", "all"])

    p = sub.add_parser("report", help="consolidate evaluation reports", argument_default=argparse.SUPPRESS)
    _add_common(p, out_required=False)
    p.add_argument("reports", nargs="+")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    given = vars(args).copy()
    command = given.pop("command")
    cfg_path = given.pop("config", None)
    merged = dict(DEFAULTS[command])
    if cfg_path:
        try:
            data = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {cfg_path} is not valid JSON: {exc.msg}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config {cfg_path} must hold a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
    merged.update(given)
    merged.setdefault("seed", None)
    if merged["seed"] is None:
        merged["seed"] = _seed_default()
    merged.setdefault("out", None)
    merged["command"] = command
    return merged


def _require(opts: dict, *keys):
    for k in keys:
        if opts.get(k) in (None, []):
            raise UsageError(f"{opts['command']}: --{k.replace('_', '-')} is required")


# -- helpers -------------------------------------------------------------------------------


def _model_config(opts: dict) -> ModelConfig:
    kw = dict(PRESETS[opts["preset"]]) if opts.get("preset") else {}
    for k in ("arch", "layers", "hidden", "heads"):
        if opts.get(k) is not None:
            kw[k] = opts[k]
    for k in ("max_len", "dropout", "ffn_mult"):
        kw[k] = opts[k]
    return ModelConfig(**kw)


def _train_config(opts: dict, seed: Optional[int] = None) -> TrainConfig:
    return TrainConfig(
        batch_size=opts["batch_size"],
        learning_rate=opts["learning_rate"],
        epochs=opts["epochs"],
        seed=opts["seed"] if seed is None else seed,
        scheduler=opts["scheduler"],
        warmup_frac=opts["warmup_frac"],
        mask_rate=opts["mask_rate"],
        clip_norm=opts["clip_norm"],
    )


def _write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _finish(opts: dict, out: Path) -> None:
    _write_json(out / "runconfig.json", {k: opts[k] for k in sorted(opts)})


def _select(pairs, which: str):
    return list(pairs) if which == "all" else [p for p in pairs if p.split == which]


def _encode(pairs, cfg: ModelConfig):
    return [DEFAULT_VOCAB.encode(p.tokens, cfg.max_len) for p in pairs]


def _log_writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", encoding="utf-8")

    def log(rec):
        fh.write(json.dumps(rec) + "\n")
        fh.flush()
        print(json.dumps(rec), file=sys.stderr)

    return fh, log


# -- commands ---------------------------------------------------------------------------


def cmd_gen(opts: dict) -> int:
    _require(opts, "out")
    kw = {
        "seed": opts["seed"],
        "programs": opts["programs"],
        "split_mode": opts["split_mode"],
        "test_fraction": opts["test_fraction"],
        "multi": bool(opts["multi"]),
        "max_len": opts["max_len"],
    }
    if opts.get("families"):
        kw["families"] = list(opts["families"])
    if opts.get("test_families"):
        kw["test_families"] = list(opts["test_families"])
    manifest = CorpusManifest(**kw)
    pairs = build_corpus(manifest, jobs=opts["jobs"])
    out = Path(opts["out"])
    save_jsonl(pairs, out / "corpus.jsonl")
    _write_json(out / "manifest.json", summarize(manifest, pairs))
    _finish(opts, out)
    return EXIT_OK


def cmd_pretrain(opts: dict) -> int:
    _require(opts, "out")
    cfg = _model_config(opts)
    tcfg = _train_config(opts)
    if opts.get("corpus"):
        sources = [p.fixed or p.buggy for p in load_jsonl(opts["corpus"])]
    else:
        sources = generate_sources(opts["sources"], opts["seed"])
    encoded = [DEFAULT_VOCAB.encode([t.text for t in tokenize(s)], cfg.max_len) for s in sources]
    out = Path(opts["out"])
    fh, log = _log_writer(out / "train_log.jsonl")
    with fh:
        result = pretrain_mlm(encoded, cfg, tcfg, log=log)
    save_checkpoint(out / "checkpoint", cfg, result.params, {"objective": "mlm", "train": tcfg.to_dict()})
    _finish(opts, out)
    return EXIT_OK


def _init_from(opts: dict):
    init = opts.get("init", "none")
    if init in (None, "none"):
        return _model_config(opts), None
    cfg, params, _ = load_checkpoint(init)
    return cfg, params


def cmd_finetune(opts: dict) -> int:
    _require(opts, "out", "corpus")
    cfg, init = _init_from(opts)
    tcfg = _train_config(opts)
    train = _select(load_jsonl(opts["corpus"]), "train")
    out = Path(opts["out"])
    fh, log = _log_writer(out / "train_log.jsonl")
    with fh:
        result = finetune(_encode(train, cfg), [p.labels for p in train], cfg, tcfg, init=init, log=log)
    meta = {"objective": "blame", "init": str(opts.get("init", "none")), "train": tcfg.to_dict()}
    save_checkpoint(out / "checkpoint", cfg, result.params, meta)
    _finish(opts, out)
    return EXIT_OK


def _seeded_models(opts: dict, cfg: ModelConfig, corpus_pairs, n: int):
    train = _select(corpus_pairs, "train")
    enc = _encode(train, cfg)
    for k in range(n):
        seed = opts["seed"] + k
        yield seed, finetune(enc, [p.labels for p in train], cfg, _train_config(opts, seed)).params


def _score(name: str, opts: dict, pairs, runs) -> dict:
    """``runs`` yields (label, predictions); one run gives a plain report,
    several add per-seed values and their mean and standard deviation."""
    accs = [(label, corpus_accuracy(pairs, preds, opts["threshold"])) for label, preds in runs]
    first = accs[0][1]
    extra = {}
    if len(accs) > 1:
        ious = [a["mean_iou"] for _, a in accs]
        tops = [a["top3_rate"] for _, a in accs]
        extra = {
            "runs": [{"run": label, "mean_iou": a["mean_iou"], "top3_rate": a["top3_rate"]} for label, a in accs],
            "mean_iou_sd": float(np.std(ious, ddof=1)),
        }
        first = dict(first, mean_iou=float(np.mean(ious)), top3_rate=float(np.mean(tops)))
    return make_report(name, opts["corpus"], opts["threshold"], first, **extra)


def cmd_eval(opts: dict) -> int:
    _require(opts, "out", "corpus")
    pairs = load_jsonl(opts["corpus"])
    test = _select(pairs, opts["split"])
    if opts.get("checkpoint") and opts.get("seeds"):
        raise UsageError("eval: give either --checkpoint or --seeds, not both")
    if opts.get("checkpoint"):
        paths = opts["checkpoint"] if isinstance(opts["checkpoint"], list) else [opts["checkpoint"]]

        def runs():
            for path in paths:
                cfg, params, _ = load_checkpoint(path)
                yield str(path), predict(params, cfg, _encode(test, cfg))

        name = paths[0] if len(paths) == 1 else f"{len(paths)} checkpoints"
    elif opts.get("seeds"):
        cfg = _model_config(opts)

        def runs():
            for seed, params in _seeded_models(opts, cfg, pairs, opts["seeds"]):
                yield f"seed{seed}", predict(params, cfg, _encode(test, cfg))

        name = f"{cfg.arch}-L{cfg.layers}-H{cfg.hidden} x{opts['seeds']} seeds"
    else:
        raise UsageError("eval: --checkpoint or --seeds is required")
    report = _score(name, opts, test, runs())
    out = Path(opts["out"])
    _write_json(out / "report.json", report)
    _finish(opts, out)
    return EXIT_OK


def cmd_baseline(opts: dict) -> int:
    _require(opts, "out", "corpus")
    from .lang import compiler_blame

    pairs = load_jsonl(opts["corpus"])
    test = _select(pairs, opts["split"])
    if opts["kind"] == "compiler":
        runs = [("compiler", [compiler_blame(p.buggy).astype(np.float64) for p in test])]
        name = "compiler"
    else:
        cfg = ModelConfig(
            arch="bilstm", layers=opts["layers"], hidden=opts["hidden"], max_len=opts["max_len"], dropout=opts["dropout"]
        )

        def gen():
            for seed, params in _seeded_models(opts, cfg, pairs, opts["seeds"]):
                yield f"seed{seed}", predict(params, cfg, _encode(test, cfg))

        runs = gen()
        name = f"bilstm-L{cfg.layers}-H{cfg.hidden}"
    report = _score(name, opts, test, runs)
    out = Path(opts["out"])
    _write_json(out / "report.json", report)
    _finish(opts, out)
    return EXIT_OK


def cmd_sweep(opts: dict) -> int:
    _require(opts, "out", "corpus", "checkpoint")
    test = _select(load_jsonl(opts["corpus"]), opts["split"])
    cfg, params, _ = load_checkpoint(opts["checkpoint"])
    preds = predict(params, cfg, _encode(test, cfg))
    rows = threshold_sweep(test, preds, opts["thresholds"])
    ious = [v for _, v in rows]
    report = {
        "model": str(opts["checkpoint"]),
        "corpus": str(opts["corpus"]),
        "rows": [{"threshold": t, "mean_iou": v} for t, v in rows],
        "variation": max(ious) - min(ious),
    }
    out = Path(opts["out"])
    _write_json(out / "sweep.json", report)
    _finish(opts, out)
    return EXIT_OK


def cmd_probe(opts: dict) -> int:
    from .probe import probe_report

    _require(opts, "out", "corpus", "checkpoint")
    pairs = load_jsonl(opts["corpus"])
    train = _select(pairs, "train")[: opts.get("max_train")]
    test = _select(pairs, opts["split"])[: opts.get("max_test")]
    cfg, params, _ = load_checkpoint(opts["checkpoint"])
    if opts["control"] == "random":
        control = (cfg, init_params(cfg, opts["seed"]))
    else:
        c_cfg, c_params, _ = load_checkpoint(opts["control"])
        control = (c_cfg, c_params)
    report = probe_report(
        (cfg, params),
        control,
        train,
        test,
        layer=opts.get("layer"),
        rank=opts["rank"],
        epochs=opts["epochs"],
        seed=opts["seed"],
        model_name=str(opts["checkpoint"]),
        control_name=str(opts["control"]),
    )
    out = Path(opts["out"])
    _write_json(out / "probe_report.json", report)
    _finish(opts, out)
    return EXIT_OK


_REPORT_KEYS = ("model", "mean_iou")


def consolidate(reports: Sequence[dict]) -> list[dict]:
    rows = [
        {"model": r["model"], "mean_iou": float(r["mean_iou"]), "top3_rate": r.get("top3_rate"),
         "threshold": r.get("threshold"), "corpus": r.get("corpus")}
        for r in reports
    ]
    rows.sort(key=lambda r: -r["mean_iou"])
    return rows


def format_table(rows: list[dict]) -> str:
    width = max([len("model")] + [len(str(r["model"])) for r in rows])
    lines = [f"{'model':<{width}}  mean_iou  top3_rate"]
    for r in rows:
        top = "" if r["top3_rate"] is None else f"{r['top3_rate']:.4f}"
        lines.append(f"{str(r['model']):<{width}}  {r['mean_iou']:.4f}    {top}")
    return "\n".join(lines) + "\n"


def cmd_report(opts: dict) -> int:
    reports = []
    for path in opts["reports"]:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict) or any(k not in data for k in _REPORT_KEYS):
            raise FormatError(f"{path}: not an evaluation report (needs {list(_REPORT_KEYS)})")
        reports.append(data)
    rows = consolidate(reports)
    table = format_table(rows)
    sys.stdout.write(table)
    if opts.get("out"):
        out = Path(opts["out"])
        _write_json(out / "comparison.json", {"rows": rows})
        atomic_write_text(out / "comparison.txt", table)
        _finish(opts, out)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "pretrain": cmd_pretrain,
    "finetune": cmd_finetune,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
    "report": cmd_report,
}


def _fail(code: int, message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve(args)
        return COMMANDS[opts["command"]](opts)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except (FormatError, ConfigError, CheckpointMismatch, DivergenceError, ShapeMismatch, TooLong, GeneratorBug,
            ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_INVALID, f"{type(exc).__name__}: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
