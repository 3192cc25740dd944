"""Well-typed seed programs, one generator per template family.

Each family is a small novice-style exercise with randomized names,
constants, operators and optional extra bindings. Identifiers come from a
bounded pool per role.
"""
from __future__ import annotations

import numpy as np

from ..lang import is_well_typed, parse, tokenize

FUNS = ["f", "g", "go", "aux", "loop", "helper", "walk", "step", "run", "calc", "work", "build"]
LISTS = ["xs", "ys", "l", "lst", "l1", "l2", "items", "nums"]
HEADS = ["h", "x", "hd", "a", "y", "e"]
TAILS = ["t", "rest", "tl", "r", "more", "xs'"]
NUMS = ["n", "m", "k", "i", "j", "c"]
ACCS = ["acc", "sum", "total", "res", "s"]
RESULTS = ["result", "answer", "out", "v", "value", "test"]


class _Names:
    """Draws distinct identifiers from role pools."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.used: set[str] = set()

    def __call__(self, pool: list[str]) -> str:
        choices = [p for p in pool if p not in self.used]
        name = choices[int(self.rng.integers(len(choices)))]
        self.used.add(name)
        return name


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _int(rng, lo=0, hi=10) -> str:
    return str(int(rng.integers(lo, hi)))


def _int_list(rng, lo=1, hi=5) -> str:
    n = int(rng.integers(lo, hi))
    return "[" + "; ".join(_int(rng) for _ in range(n)) + "]"


def list_fold(rng):
    nm = _Names(rng)
    f, xs, h, t = nm(FUNS), nm(LISTS), nm(HEADS), nm(TAILS)
    op, base = _pick(rng, [("+", "0"), ("*", "1"), ("+", "0"), ("-", "0")])
    lines = [f"let rec {f} {xs} =", f"  match {xs} with", f"  | [] -> {base}"]
    if rng.random() < 0.4:
        lines.append(f"  | {h} :: [] -> {h}")
    lines.append(f"  | {h} :: {t} -> {h} {op} {f} {t}")
    if rng.random() < 0.7:
        r = nm(RESULTS)
        lines.append(f"let {r} = {f} {_int_list(rng)}")
    return "\n".join(lines)


def list_zip(rng):
    nm = _Names(rng)
    f, xs, ys = nm(FUNS), nm(LISTS), nm(LISTS)
    x, y, xt, yt = nm(HEADS), nm(HEADS), nm(TAILS), nm(TAILS)
    elem = _pick(rng, [f"({x}, {y})", f"({x}, {y})", f"{x} + {y}", f"{x} * {y}"])
    lines = [
        f"let rec {f} {xs} {ys} =",
        f"  match {xs} with",
        "  | [] -> []",
        f"  | {x} :: {xt} ->",
        f"    (match {ys} with",
        "     | [] -> []",
        f"     | {y} :: {yt} -> {elem} :: {f} {xt} {yt})",
    ]
    if rng.random() < 0.6:
        lines.append(f"let {nm(RESULTS)} = {f} {_int_list(rng, 2, 4)} {_int_list(rng, 2, 4)}")
    return "\n".join(lines)


def arith_helper(rng):
    nm = _Names(rng)
    sq, f, a, b, x = nm(FUNS), nm(FUNS), nm(NUMS), nm(NUMS), nm(NUMS)
    body = _pick(rng, [f"{x} * {x}", f"{x} + {x}", f"{x} * {x} + 1", f"2 * {x} - 1"])
    comb = _pick(rng, [f"{sq} {a} + {sq} {b}", f"{sq} {a} - {sq} {b}", f"{sq} ({a} + {b})", f"{sq} {a} * {b}"])
    lines = [f"let {sq} {x} = {body}", f"let {f} {a} {b} = {comb} - {_int(rng)}"]
    if rng.random() < 0.7:
        lines.append(f"let {nm(RESULTS)} = {f} {_int(rng, 1)} {_int(rng, 1)}")
    return "\n".join(lines)


def cond_chain(rng):
    nm = _Names(rng)
    f, n = nm(FUNS), nm(NUMS)
    kind = _pick(rng, ["int", "bool", "list"])
    if kind == "int":
        vals = [_int(rng) for _ in range(3)]
    elif kind == "bool":
        vals = [_pick(rng, ["true", "false"]) for _ in range(3)]
    else:
        vals = ["[]", f"[{n}]", f"{n} :: [{n}]"]
    c1 = _pick(rng, [f"{n} < 0", f"{n} <= {_int(rng)}", f"{n} = 0 || {n} < 0"])
    c2 = _pick(rng, [f"{n} = {_int(rng)}", f"{n} < {_int(rng, 5, 20)}", f"{n} < 10 && 0 < {n}"])
    lines = [
        f"let {f} {n} =",
        f"  if {c1} then {vals[0]}",
        f"  else if {c2} then {vals[1]}",
        f"  else {vals[2]}",
    ]
    if rng.random() < 0.6:
        lines.append(f"let {nm(RESULTS)} = {f} {_int(rng)}")
    return "\n".join(lines)


def hof_map(rng):
    nm = _Names(rng)
    mp, g, xs, h, t, x = nm(FUNS), nm(FUNS), nm(LISTS), nm(HEADS), nm(TAILS), nm(NUMS)
    lines = [
        f"let rec {mp} {g} {xs} =",
        f"  match {xs} with",
        "  | [] -> []",
        f"  | {h} :: {t} -> {g} {h} :: {mp} {g} {t}",
    ]
    fn = _pick(rng, [f"fun {x} -> {x} + {_int(rng, 1)}", f"fun {x} -> {x} * {x}", f"fun {x} -> {x} < {_int(rng)}"])
    if rng.random() < 0.8:
        lines.append(f"let {nm(RESULTS)} = {mp} ({fn}) {_int_list(rng)}")
    return "\n".join(lines)


def clone(rng):
    nm = _Names(rng)
    f, x, n = nm(FUNS), nm(HEADS), nm(NUMS)
    lines = [
        f"let rec {f} {x} {n} =",
        f"  if {n} <= 0 then []",
        f"  else {x} :: {f} {x} ({n} - 1)",
    ]
    if rng.random() < 0.7:
        v = _pick(rng, [_int(rng), "true", _int_list(rng, 1, 3)])
        lines.append(f"let {nm(RESULTS)} = {f} {v} {_int(rng, 1)}")
    return "\n".join(lines)


def list_filter(rng):
    nm = _Names(rng)
    f, p, xs, h, t = nm(FUNS), nm(FUNS), nm(LISTS), nm(HEADS), nm(TAILS)
    lines = [
        f"let rec {f} {p} {xs} =",
        f"  match {xs} with",
        "  | [] -> []",
        f"  | {h} :: {t} ->",
        f"    if {p} {h} then {h} :: {f} {p} {t}",
        f"    else {f} {p} {t}",
    ]
    if rng.random() < 0.7:
        x = nm(NUMS)
        pred = _pick(rng, [f"fun {x} -> {x} < {_int(rng)}", f"fun {x} -> 0 < {x}", f"fun {x} -> {x} = {_int(rng)}"])
        lines.append(f"let {nm(RESULTS)} = {f} ({pred}) {_int_list(rng)}")
    return "\n".join(lines)


def accumulate(rng):
    nm = _Names(rng)
    f, xs, acc, t = nm(FUNS), nm(LISTS), nm(ACCS), nm(TAILS)
    h = nm(HEADS)
    step = _pick(rng, [(f"_ :: {t}", f"{acc} + 1"), (f"{h} :: {t}", f"{acc} + {h}"), (f"{h} :: {t}", f"{h} * {acc}")])
    lines = [
        f"let rec {f} {xs} {acc} =",
        f"  match {xs} with",
        f"  | [] -> {acc}",
        f"  | {step[0]} -> {f} {t} ({step[1]})",
    ]
    if rng.random() < 0.7:
        lines.append(f"let {nm(RESULTS)} = {f} {_int_list(rng)} {_int(rng, 0, 2)}")
    return "\n".join(lines)


def pair_ops(rng):
    nm = _Names(rng)
    f, p, a, b = nm(FUNS), nm(LISTS), nm(HEADS), nm(HEADS)
    body = _pick(rng, [f"({b}, {a})", f"{a} + {b}", f"({a} + 1, {b})", f"({a}, {a} < {b})"])
    lines = [f"let {f} {p} =", f"  match {p} with", f"  | ({a}, {b}) -> {body}"]
    lines.append(f"let {nm(RESULTS)} = {f} ({_int(rng)}, {_int(rng)})")
    return "\n".join(lines)


def power(rng):
    nm = _Names(rng)
    f, x = nm(FUNS), nm(NUMS)
    base = _int(rng, 2, 11)
    cmp = _pick(rng, [f"{x} = 0", f"{x} <= 0", f"{x} < 1"])
    lines = [f"let rec {f} {x} = if {cmp} then 1 else {base} * {f} ({x} - 1)"]
    if rng.random() < 0.5:
        g, y = nm(FUNS), nm(NUMS)
        lines.append(f"let {g} {y} = {f} {y} + {_int(rng)}")
    if rng.random() < 0.6:
        lines.append(f"let {nm(RESULTS)} = {f} {_int(rng, 1, 5)}")
    return "\n".join(lines)


FAMILIES = {
    "list_fold": list_fold,
    "list_zip": list_zip,
    "arith_helper": arith_helper,
    "cond_chain": cond_chain,
    "hof_map": hof_map,
    "clone": clone,
    "list_filter": list_filter,
    "accumulate": accumulate,
    "pair_ops": pair_ops,
    "power": power,
}


class GeneratorBug(RuntimeError):
    pass


def generate_seed_program(family: str, rng_seed: int, max_len: int = 96) -> str:
    """Emit a well-typed program of the given family.

    A template producing an ill-typed or over-long program is a bug in the
    template and raises ``GeneratorBug``.
    """
    try:
        template = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILIES)}") from None
    rng = np.random.default_rng(rng_seed)
    source = template(rng)
    tokens = tokenize(source)
    if len(tokens) > max_len:
        raise GeneratorBug(f"{family} emitted {len(tokens)} tokens (max {max_len})")
    if not is_well_typed(parse(tokens)):
        raise GeneratorBug(f"{family} emitted an ill-typed program:\n{source}")
    return source
