"""Novice-style mutation operators that turn well-typed programs ill-typed.

A mutation is a set of byte-range edits on the source. The tokens the edit
introduces (or, for a deletion, the token just before the gap) are the
ground-truth blame labels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..lang import ast as A
from ..lang import infer_annotated, parse, tokenize
from ..lang.infer import TypeErrorReport, UnboundVariable
from ..lang.lexer import LexError
from ..lang.parser import ParseError
from ..lang.types import free_vars

# Relative sampling weights. Deletions and swaps are kept rare: a token diff
# cannot see a deletion, and it only recovers one side of a swap.
OPERATORS = {
    "int_to_nil": 1.0,
    "nil_to_int": 1.0,
    "swap_plus_cons": 1.0,
    "replace_var": 1.0,
    "int_to_bool": 0.6,
    "drop_arg": 0.05,
    "swap_branches": 0.05,
}

RETRY_BUDGET = 40


class NoViableMutation(ValueError):
    pass


@dataclass(frozen=True)
class Edit:
    start: int
    end: int
    text: str
    # byte range inside ``text`` whose tokens get label 1; None labels all of it
    label: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class Site:
    op: str
    edits: tuple[Edit, ...]

    @property
    def extent(self) -> tuple[int, int]:
        return (min(e.start for e in self.edits), max(e.end for e in self.edits))


@dataclass
class Mutation:
    source: str
    labels: np.ndarray
    op: str
    span: tuple[int, int]

    def record(self) -> dict:
        return {"op": self.op, "span": [int(self.span[0]), int(self.span[1])]}


def _concrete(t) -> bool:
    return not free_vars(t)


def _sites(source: str) -> list[Site]:
    tokens = tokenize(source)
    root = parse(tokens)
    result, notes = infer_annotated(root)
    if isinstance(result, TypeErrorReport):
        raise ValueError("source must type-check before mutation")
    types = notes.types
    out: list[Site] = []
    for node in root.walk():
        if isinstance(node, A.IntLit):
            tok = tokens[node.tok]
            out.append(Site("int_to_nil", (Edit(tok.start, tok.end, "[]"),)))
            out.append(Site("int_to_bool", (Edit(tok.start, tok.end, "true" if node.value % 2 else "false"),)))
        elif isinstance(node, (A.ListLit, A.PNil)) and (isinstance(node, A.PNil) or not node.items):
            tok = tokens[node.tok if isinstance(node, A.PNil) else node.toks[0]]
            out.append(Site("nil_to_int", (Edit(tok.start, tok.end, "0"),)))
        elif isinstance(node, A.BinOp) and node.op == "+":
            tok = tokens[node.head]
            out.append(Site("swap_plus_cons", (Edit(tok.start, tok.end, "::"),)))
        elif isinstance(node, A.Cons):
            tok = tokens[node.head]
            out.append(Site("swap_plus_cons", (Edit(tok.start, tok.end, "+"),)))
        elif isinstance(node, A.Var) and id(node) in notes.scopes:
            own = notes.scopes[id(node)].get(node.name)
            tok = tokens[node.tok]
            for name, t in sorted(notes.scopes[id(node)].items()):
                if name == node.name or own is None:
                    continue
                # both sides concrete and different: a guaranteed clash
                if _concrete(t) and _concrete(own) and t != own:
                    out.append(Site("replace_var", (Edit(tok.start, tok.end, name),)))
        elif isinstance(node, A.App) and not isinstance(node.arg, A.Tuple):
            fn_end = node.fn.span[1]
            ltok = tokens[max(A.subtree_tokens(node.fn))]
            # keep the callee's last token (labelled), delete up to the argument's end
            edits = (Edit(ltok.start, ltok.end, ltok.text), Edit(fn_end, node.arg.span[1], ""))
            out.append(Site("drop_arg", edits))
        elif isinstance(node, A.If):
            tc, tt = types.get(id(node.cond)), types.get(id(node.then))
            if tc is not None and tt is not None and tc != tt:
                a, b = node.cond.span, node.then.span
                ta = source.encode()[a[0] : a[1]].decode()
                tb = source.encode()[b[0] : b[1]].decode()
                out.append(Site("swap_branches", (Edit(a[0], a[1], tb), Edit(b[0], b[1], ta))))
    return out


def apply_edits(source: str, edits) -> tuple[str, list[tuple[int, int]]]:
    """Apply non-overlapping edits; return the new text and the labelled byte
    ranges in it."""
    data = source.encode()
    parts = []
    regions = []
    pos = 0
    out_len = 0
    for e in sorted(edits, key=lambda e: (e.start, e.end)):
        if e.start < pos:
            raise ValueError("overlapping edits")
        chunk = data[pos : e.start]
        parts.append(chunk)
        out_len += len(chunk)
        new = e.text.encode()
        lo, hi = e.label if e.label is not None else (0, len(new))
        if hi > lo:
            regions.append((out_len + lo, out_len + hi))
        parts.append(new)
        out_len += len(new)
        pos = e.end
    parts.append(data[pos:])
    return b"".join(parts).decode(), regions


def _labels_for(tokens, regions) -> np.ndarray:
    labels = np.zeros(len(tokens), dtype=np.int8)
    for i, tok in enumerate(tokens):
        for lo, hi in regions:
            if tok.start >= lo and tok.end <= hi:
                labels[i] = 1
    return labels


def _try(source: str, sites: list[Site]) -> Optional[Mutation]:
    edits = [e for s in sites for e in s.edits]
    try:
        mutant, regions = apply_edits(source, edits)
        tokens = tokenize(mutant)
        result, _ = infer_annotated(parse(tokens), annotate=False)
    except (LexError, ParseError, UnboundVariable, ValueError):
        return None
    if not isinstance(result, TypeErrorReport):
        return None
    labels = _labels_for(tokens, regions)
    if not labels.any():
        return None
    lo = min(r[0] for r in regions)
    hi = max(r[1] for r in regions)
    op = "+".join(s.op for s in sites)
    return Mutation(mutant, labels, op, (lo, hi))


def _weighted_order(rng: np.random.Generator, sites: list[Site]) -> list[Site]:
    if not sites:
        return []
    w = np.array([OPERATORS[s.op] for s in sites], dtype=np.float64)
    # weighted sampling without replacement via exponential keys
    keys = rng.exponential(size=len(sites)) / w
    return [sites[i] for i in np.argsort(keys, kind="stable")]


def mutate(source: str, rng_seed: int, n_mutations: int = 1) -> Mutation:
    """Apply ``n_mutations`` non-overlapping mutations so the result is ill-typed.

    Candidate sites are tried in a seeded, operator-weighted order; the first
    candidate whose result fails to type-check is accepted.
    """
    rng = np.random.default_rng(rng_seed)
    sites = _sites(source)
    if n_mutations == 1:
        for site in _weighted_order(rng, sites)[:RETRY_BUDGET]:
            m = _try(source, [site])
            if m is not None:
                return m
        raise NoViableMutation(f"no ill-typed mutant within {RETRY_BUDGET} tries")
    for _ in range(RETRY_BUDGET):
        chosen: list[Site] = []
        for site in _weighted_order(rng, sites):
            lo, hi = site.extent
            if all(hi <= c.extent[0] or lo >= c.extent[1] for c in chosen):
                chosen.append(site)
            if len(chosen) == n_mutations:
                break
        if len(chosen) < n_mutations:
            break
        m = _try(source, chosen)
        if m is not None:
            return m
    raise NoViableMutation(f"no ill-typed {n_mutations}-site mutant within {RETRY_BUDGET} tries")
