"""Hindley-Milner inference that stops at the first failed constraint.

Children are visited left to right and each constraint is checked as soon as
its operands are typed, so the reported location is where a standard compiler
would complain, which is often not where the mistake was made.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import ast as A
from .types import (
    BOOL,
    INT,
    MonoType,
    Scheme,
    TBool,
    TFun,
    TInt,
    TList,
    TTuple,
    TVar,
    free_vars,
    rename_canonical,
)


class UnboundVariable(NameError):
    def __init__(self, name: str, span: tuple[int, int]):
        super().__init__(f"unbound variable {name!r} at {span}")
        self.name = name
        self.span = span


@dataclass
class TypeErrorReport:
    blamed_span: tuple[int, int]
    blamed_token_indices: frozenset[int]
    expected: MonoType
    actual: MonoType
    message: str
    node: A.Node = field(repr=False, compare=False, default=None)


@dataclass
class Annotations:
    """Side tables filled during inference (used by the mutation engine)."""

    types: dict[int, MonoType] = field(default_factory=dict)  # id(node) -> type
    scopes: dict[int, dict[str, MonoType]] = field(default_factory=dict)  # id(Var) -> visible names


class _Mismatch(Exception):
    pass


class _Failure(Exception):
    def __init__(self, report: TypeErrorReport):
        self.report = report


class _Inferencer:
    def __init__(self, annotate: bool = False):
        self.subst: dict[int, MonoType] = {}
        self.counter = 0
        self.notes = Annotations() if annotate else None

    def fresh(self) -> TVar:
        self.counter += 1
        return TVar(self.counter)

    def prune(self, t: MonoType) -> MonoType:
        while isinstance(t, TVar) and t.id in self.subst:
            t = self.subst[t.id]
        return t

    def zonk(self, t: MonoType) -> MonoType:
        t = self.prune(t)
        if isinstance(t, TList):
            return TList(self.zonk(t.elem))
        if isinstance(t, TFun):
            return TFun(self.zonk(t.arg), self.zonk(t.ret))
        if isinstance(t, TTuple):
            return TTuple(tuple(self.zonk(e) for e in t.elems))
        return t

    def occurs(self, v: int, t: MonoType) -> bool:
        return v in free_vars(self.zonk(t))

    def unify(self, a: MonoType, b: MonoType) -> None:
        a, b = self.prune(a), self.prune(b)
        if isinstance(a, TVar):
            if isinstance(b, TVar) and a.id == b.id:
                return
            if self.occurs(a.id, b):
                raise _Mismatch
            self.subst[a.id] = b
            return
        if isinstance(b, TVar):
            self.unify(b, a)
            return
        if isinstance(a, (TInt, TBool)) and type(a) is type(b):
            return
        if isinstance(a, TList) and isinstance(b, TList):
            self.unify(a.elem, b.elem)
            return
        if isinstance(a, TFun) and isinstance(b, TFun):
            self.unify(a.arg, b.arg)
            self.unify(a.ret, b.ret)
            return
        if isinstance(a, TTuple) and isinstance(b, TTuple) and len(a.elems) == len(b.elems):
            for x, y in zip(a.elems, b.elems):
                self.unify(x, y)
            return
        raise _Mismatch

    def expect(self, node: A.Node, expected: MonoType, actual: MonoType) -> None:
        """Unify, blaming ``node`` on failure."""
        exp_z, act_z = self.zonk(expected), self.zonk(actual)
        try:
            self.unify(expected, actual)
        except _Mismatch:
            # every token inside the node's span, including any it only encloses
            inside = A.subtree_tokens(node)
            toks = frozenset(range(min(inside), max(inside) + 1))
            raise _Failure(
                TypeErrorReport(
                    blamed_span=node.span,
                    blamed_token_indices=toks,
                    expected=exp_z,
                    actual=act_z,
                    message=f"This expression has type {act_z} but an expression was expected of type {exp_z}",
                    node=node,
                )
            ) from None

    # -- schemes -------------------------------------------------------------

    def instantiate(self, s: Scheme) -> MonoType:
        if not s.vars:
            return s.type
        mapping = {v: self.fresh() for v in s.vars}

        def go(t):
            t = self.prune(t)
            if isinstance(t, TVar):
                return mapping.get(t.id, t)
            if isinstance(t, TList):
                return TList(go(t.elem))
            if isinstance(t, TFun):
                return TFun(go(t.arg), go(t.ret))
            if isinstance(t, TTuple):
                return TTuple(tuple(go(e) for e in t.elems))
            return t

        return go(s.type)

    def generalize(self, env: dict[str, Scheme], t: MonoType) -> Scheme:
        t = self.zonk(t)
        env_vars: set[int] = set()
        for s in env.values():
            env_vars |= free_vars(self.zonk(s.type)) - s.vars
        return Scheme(frozenset(free_vars(t) - env_vars), t)

    # -- expressions ---------------------------------------------------------

    def infer(self, node: A.Node, env: dict[str, Scheme]) -> MonoType:
        t = self._infer(node, env)
        if self.notes is not None:
            self.notes.types[id(node)] = t
        return t

    def _infer(self, node: A.Node, env: dict[str, Scheme]) -> MonoType:
        if isinstance(node, A.IntLit):
            return INT
        if isinstance(node, A.BoolLit):
            return BOOL
        if isinstance(node, A.Var):
            if node.name not in env:
                raise UnboundVariable(node.name, node.span)
            if self.notes is not None:
                self.notes.scopes[id(node)] = {k: s.type for k, s in env.items()}
            return self.instantiate(env[node.name])
        if isinstance(node, A.Fun):
            a = self.fresh()
            inner = dict(env)
            inner[node.name] = Scheme(frozenset(), a)
            return TFun(a, self.infer(node.body, inner))
        if isinstance(node, A.App):
            tf = self.infer(node.fn, env)
            targ = self.infer(node.arg, env)
            tf = self.prune(tf)
            if isinstance(tf, TVar):
                ret = self.fresh()
                self.expect(node, tf, TFun(targ, ret))
                return ret
            if isinstance(tf, TFun):
                self.expect(node.arg, tf.arg, targ)
                return tf.ret
            self.expect(node.fn, TFun(targ, self.fresh()), tf)
        if isinstance(node, A.LetRec):
            a = self.fresh()
            inner = dict(env)
            inner[node.name] = Scheme(frozenset(), a)
            tv = self.infer(node.value, inner)
            self.expect(node.value, a, tv)
            return self._let_body(node, env, self.generalize(env, a))
        if isinstance(node, A.Let):
            tv = self.infer(node.value, env)
            return self._let_body(node, env, self.generalize(env, tv))
        if isinstance(node, A.If):
            tc = self.infer(node.cond, env)
            self.expect(node.cond, BOOL, tc)
            tt = self.infer(node.then, env)
            te = self.infer(node.orelse, env)
            self.expect(node.orelse, tt, te)
            return tt
        if isinstance(node, A.Match):
            ts = self.infer(node.scrutinee, env)
            result = self.fresh()
            for pat, body in node.arms:
                bindings: dict[str, Scheme] = {}
                tp = self.pattern(pat, bindings)
                self.expect(pat, ts, tp)
                inner = dict(env)
                inner.update(bindings)
                tb = self.infer(body, inner)
                self.expect(body, result, tb)
            return result
        if isinstance(node, A.ListLit):
            elem = self.fresh()
            for item in node.items:
                ti = self.infer(item, env)
                self.expect(item, elem, ti)
            return TList(elem)
        if isinstance(node, A.Cons):
            th = self.infer(node.head_expr, env)
            tt = self.infer(node.tail, env)
            self.expect(node.tail, TList(th), tt)
            return TList(th)
        if isinstance(node, A.BinOp):
            if node.op in ("+", "-", "*", "&&", "||"):
                operand = INT if node.op in ("+", "-", "*") else BOOL
                self.expect(node.left, operand, self.infer(node.left, env))
                self.expect(node.right, operand, self.infer(node.right, env))
                return operand
            tl = self.infer(node.left, env)
            tr = self.infer(node.right, env)
            self.expect(node.right, tl, tr)
            return BOOL
        if isinstance(node, A.Tuple):
            return TTuple(tuple(self.infer(item, env) for item in node.items))
        raise TypeError(f"unexpected node {type(node).__name__}")

    def _let_body(self, node: A.Let, env, scheme: Scheme) -> MonoType:
        inner = dict(env)
        inner[node.name] = scheme
        if node.body is None:
            return self.instantiate(scheme)
        return self.infer(node.body, inner)

    def pattern(self, pat: A.Node, bindings: dict[str, Scheme]) -> MonoType:
        t = self._pattern(pat, bindings)
        if self.notes is not None:
            self.notes.types[id(pat)] = t
        return t

    def _pattern(self, pat: A.Node, bindings: dict[str, Scheme]) -> MonoType:
        if isinstance(pat, A.PVar):
            a = self.fresh()
            bindings[pat.name] = Scheme(frozenset(), a)
            return a
        if isinstance(pat, A.PWild):
            return self.fresh()
        if isinstance(pat, A.PNil):
            return TList(self.fresh())
        if isinstance(pat, A.PInt):
            return INT
        if isinstance(pat, A.PBool):
            return BOOL
        if isinstance(pat, A.PCons):
            th = self.pattern(pat.head_pat, bindings)
            tt = self.pattern(pat.tail, bindings)
            self.expect(pat.tail, TList(th), tt)
            return TList(th)
        if isinstance(pat, A.PTuple):
            return TTuple(tuple(self.pattern(p, bindings) for p in pat.items))
        raise TypeError(f"unexpected pattern {type(pat).__name__}")


def infer(ast: A.Node, env: Optional[dict[str, Scheme]] = None) -> Union[MonoType, TypeErrorReport]:
    """Principal type of ``ast``, or the report for the first failed constraint.

    Raises ``UnboundVariable`` for free identifiers.
    """
    t, _ = infer_annotated(ast, env, annotate=False)
    return t


def infer_annotated(ast: A.Node, env=None, annotate: bool = True):
    """Like :func:`infer` but also returns per-node types and scopes.

    Recorded types are fully resolved against the final substitution (or the
    substitution at the point of failure).
    """
    inf = _Inferencer(annotate=annotate)
    try:
        result = rename_canonical(inf.zonk(inf.infer(ast, dict(env or {}))))
    except _Failure as exc:
        result = exc.report
    notes = inf.notes
    if notes is not None:
        notes.types = {k: inf.zonk(v) for k, v in notes.types.items()}
        notes.scopes = {k: {n: inf.zonk(t) for n, t in sc.items()} for k, sc in notes.scopes.items()}
    return result, notes


def is_well_typed(ast: A.Node) -> bool:
    try:
        return not isinstance(infer(ast), TypeErrorReport)
    except UnboundVariable:
        return False
