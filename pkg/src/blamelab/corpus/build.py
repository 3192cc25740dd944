"""Corpus manifests, construction, and JSONL persistence."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..lang import tokenize
from .mutate import NoViableMutation, mutate
from .templates import FAMILIES, generate_seed_program

GENERATOR_VERSION = "1"
DEFAULT_TEST_FAMILIES = ("list_filter", "pair_ops", "power")
_VARIANT_BUDGET = 50


class FormatError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class CorpusManifest:
    seed: int = 7
    programs: int = 2000
    families: list[str] = field(default_factory=lambda: sorted(FAMILIES))
    split_mode: str = "random"  # or "cross-family"
    test_fraction: float = 0.2
    test_families: list[str] = field(default_factory=lambda: list(DEFAULT_TEST_FAMILIES))
    multi: bool = False
    max_len: int = 96
    generator_version: str = GENERATOR_VERSION

    def __post_init__(self):
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown families: {sorted(unknown)}")
        if self.split_mode not in ("random", "cross-family"):
            raise ValueError(f"split_mode must be 'random' or 'cross-family', got {self.split_mode!r}")
        if self.split_mode == "cross-family":
            held = set(self.test_families) & set(self.families)
            if not held or held == set(self.families):
                raise ValueError("cross-family mode needs a proper, nonempty subset of families for test")

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusManifest":
        keys = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in keys})


@dataclass
class ProgramPair:
    id: str
    buggy: str
    fixed: Optional[str]
    tokens: list[str]
    labels: list[int]
    split: str
    family: str
    mutation: Optional[dict] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "buggy": self.buggy,
                "fixed": self.fixed,
                "tokens": self.tokens,
                "labels": self.labels,
                "split": self.split,
                "family": self.family,
                "mutation": self.mutation,
            },
            ensure_ascii=False,
        )


def derive_seed(seed: int, key: str) -> int:
    """A 63-bit seed from (manifest seed, program id), stable across runs."""
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _unit_hash(seed: int, key: str) -> float:
    return derive_seed(seed, "split:" + key) / float(1 << 63)


def _build_one(args) -> ProgramPair:
    manifest, index = args
    family = manifest.families[index % len(manifest.families)]
    pid = f"{family}-{index:05d}"
    base = derive_seed(manifest.seed, pid)
    rng = np.random.default_rng(base)
    n_mut = int(rng.integers(2, 5)) if manifest.multi else 1
    for variant in range(_VARIANT_BUDGET):
        source = generate_seed_program(family, base + variant, manifest.max_len)
        try:
            m = mutate(source, base + variant, n_mutations=n_mut)
        except NoViableMutation:
            continue
        tokens = tokenize(m.source)
        if len(tokens) > manifest.max_len:
            continue
        break
    else:
        raise NoViableMutation(f"{pid}: no mutable variant in {_VARIANT_BUDGET} attempts")
    if manifest.split_mode == "cross-family":
        split = "test" if family in manifest.test_families else "train"
    else:
        split = "test" if _unit_hash(manifest.seed, pid) < manifest.test_fraction else "train"
    return ProgramPair(
        id=pid,
        buggy=m.source,
        fixed=source,
        tokens=[t.text for t in tokens],
        labels=[int(x) for x in m.labels],
        split=split,
        family=family,
        mutation=m.record(),
    )


def build_corpus(manifest: CorpusManifest, jobs: int = 1) -> list[ProgramPair]:
    """Generate every program; output is identical for any ``jobs``."""
    work = [(manifest, i) for i in range(manifest.programs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_build_one, work, chunksize=32))
    return [_build_one(w) for w in work]


def generate_sources(n: int, seed: int, families: Optional[Iterable[str]] = None, max_len: int = 96) -> list[str]:
    """Unlabelled well-typed programs, e.g. for masked-token pretraining."""
    fams = sorted(families or FAMILIES)
    out = []
    for i in range(n):
        fam = fams[i % len(fams)]
        out.append(generate_seed_program(fam, derive_seed(seed, f"src:{fam}-{i:05d}"), max_len))
    return out


def summarize(manifest: CorpusManifest, pairs: list[ProgramPair]) -> dict:
    counts: dict[str, int] = {}
    splits = {"train": 0, "test": 0}
    for p in pairs:
        counts[p.family] = counts.get(p.family, 0) + 1
        splits[p.split] += 1
    lengths = [len(p.tokens) for p in pairs]
    return {
        "manifest": asdict(manifest),
        "family_counts": dict(sorted(counts.items())),
        "split_sizes": splits,
        "num_programs": len(pairs),
        "mean_tokens": round(float(np.mean(lengths)), 4) if lengths else 0.0,
        "mean_positive_tokens": round(float(np.mean([sum(p.labels) for p in pairs])), 4) if pairs else 0.0,
    }


def atomic_write_text(path: os.PathLike | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_jsonl(pairs: Iterable[ProgramPair], path) -> None:
    atomic_write_text(path, "".join(p.to_json() + "\n" for p in pairs))


_REQUIRED = ("id", "buggy", "fixed", "tokens", "labels", "split", "family", "mutation")


def load_jsonl(path) -> list[ProgramPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(obj, dict):
                raise FormatError("expected a JSON object", lineno)
            missing = [k for k in _REQUIRED if k not in obj]
            if missing:
                raise FormatError(f"missing keys {missing}", lineno)
            if len(obj["tokens"]) != len(obj["labels"]) or any(b not in (0, 1) for b in obj["labels"]):
                raise FormatError("labels must be 0/1 and match tokens in length", lineno)
            if obj["split"] not in ("train", "test"):
                raise FormatError(f"bad split {obj['split']!r}", lineno)
            out.append(ProgramPair(**{k: obj[k] for k in _REQUIRED}))
    return out
