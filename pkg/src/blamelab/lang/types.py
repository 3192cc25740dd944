"""Monotypes and type schemes."""
from __future__ import annotations

from dataclasses import dataclass


class MonoType:
    __slots__ = ()


@dataclass(frozen=True)
class TInt(MonoType):
    def __str__(self):
        return "int"


@dataclass(frozen=True)
class TBool(MonoType):
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class TVar(MonoType):
    id: int

    def __str__(self):
        q, r = divmod(self.id, 26)
        return "'" + chr(ord("a") + r) + (str(q) if q else "")


@dataclass(frozen=True)
class TList(MonoType):
    elem: MonoType

    def __str__(self):
        inner = str(self.elem)
        if isinstance(self.elem, (TFun, TTuple)):
            inner = f"({inner})"
        return f"{inner} list"


@dataclass(frozen=True)
class TFun(MonoType):
    arg: MonoType
    ret: MonoType

    def __str__(self):
        left = str(self.arg)
        if isinstance(self.arg, TFun):
            left = f"({left})"
        return f"{left} -> {self.ret}"


@dataclass(frozen=True)
class TTuple(MonoType):
    elems: tuple[MonoType, ...]

    def __str__(self):
        parts = []
        for e in self.elems:
            s = str(e)
            parts.append(f"({s})" if isinstance(e, (TFun, TTuple)) else s)
        return " * ".join(parts)


INT = TInt()
BOOL = TBool()


@dataclass(frozen=True)
class Scheme:
    vars: frozenset[int]
    type: MonoType


def free_vars(t: MonoType) -> set[int]:
    if isinstance(t, TVar):
        return {t.id}
    if isinstance(t, TList):
        return free_vars(t.elem)
    if isinstance(t, TFun):
        return free_vars(t.arg) | free_vars(t.ret)
    if isinstance(t, TTuple):
        out: set[int] = set()
        for e in t.elems:
            out |= free_vars(e)
        return out
    return set()


def rename_canonical(t: MonoType) -> MonoType:
    """Renumber type variables 0, 1, ... in order of first appearance."""
    mapping: dict[int, int] = {}

    def go(t):
        if isinstance(t, TVar):
            if t.id not in mapping:
                mapping[t.id] = len(mapping)
            return TVar(mapping[t.id])
        if isinstance(t, TList):
            return TList(go(t.elem))
        if isinstance(t, TFun):
            return TFun(go(t.arg), go(t.ret))
        if isinstance(t, TTuple):
            return TTuple(tuple(go(e) for e in t.elems))
        return t

    return go(t)
