"""Syntax tree for the mini-ML dialect.

Every node records ``toks``: the indices of the tokens attached directly to
it. Leaves own exactly their literal/identifier token; structural tokens
(keywords, operators, delimiters, binder names, parentheses) are attached to
the innermost node they belong to. ``head`` is the token that stands for the
node in token-level trees; ``App`` has no token of its own and borrows the
head of its function child.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional


@dataclass(eq=False)
class Node:
    toks: list[int] = field(default_factory=list, kw_only=True)
    head: Optional[int] = field(default=None, kw_only=True)
    span: tuple[int, int] = field(default=(0, 0), kw_only=True)
    parens: int = field(default=0, kw_only=True)

    def children(self) -> list["Node"]:
        return []

    def walk(self) -> Iterator["Node"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))


# -- expressions -------------------------------------------------------------


@dataclass(eq=False)
class IntLit(Node):
    tok: int
    value: int


@dataclass(eq=False)
class BoolLit(Node):
    tok: int
    value: bool


@dataclass(eq=False)
class Var(Node):
    tok: int
    name: str


@dataclass(eq=False)
class Fun(Node):
    """``fun x -> body``. Curried parameters nest; ``style`` drives printing:
    "fun" opens a ``fun`` binder, "more" continues one, "let" is a parameter
    written on the left of a let binding."""

    name: str
    name_tok: int
    body: Node
    style: str = "fun"

    def children(self):
        return [self.body]


@dataclass(eq=False)
class App(Node):
    fn: Node
    arg: Node

    def children(self):
        return [self.fn, self.arg]


@dataclass(eq=False)
class Let(Node):
    """``let name = value in body``; ``body`` is None for the last top-level
    declaration and ``toplevel`` marks declarations written without ``in``."""

    name: str
    name_tok: int
    value: Node
    body: Optional[Node]
    toplevel: bool = False

    def children(self):
        return [self.value] if self.body is None else [self.value, self.body]


@dataclass(eq=False)
class LetRec(Let):
    pass


@dataclass(eq=False)
class If(Node):
    cond: Node
    then: Node
    orelse: Node

    def children(self):
        return [self.cond, self.then, self.orelse]


@dataclass(eq=False)
class Match(Node):
    scrutinee: Node
    arms: list[tuple["Node", "Node"]]
    leading_bar: bool = True

    def children(self):
        out = [self.scrutinee]
        for pat, body in self.arms:
            out.extend((pat, body))
        return out


@dataclass(eq=False)
class ListLit(Node):
    items: list[Node]

    def children(self):
        return list(self.items)


@dataclass(eq=False)
class Cons(Node):
    head_expr: Node
    tail: Node

    def children(self):
        return [self.head_expr, self.tail]


@dataclass(eq=False)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def children(self):
        return [self.left, self.right]


@dataclass(eq=False)
class Tuple(Node):
    items: list[Node]

    def children(self):
        return list(self.items)


# -- patterns ----------------------------------------------------------------


@dataclass(eq=False)
class PVar(Node):
    tok: int
    name: str


@dataclass(eq=False)
class PWild(Node):
    tok: int


@dataclass(eq=False)
class PNil(Node):
    tok: int


@dataclass(eq=False)
class PInt(Node):
    tok: int
    value: int


@dataclass(eq=False)
class PBool(Node):
    tok: int
    value: bool


@dataclass(eq=False)
class PCons(Node):
    head_pat: Node
    tail: Node

    def children(self):
        return [self.head_pat, self.tail]


@dataclass(eq=False)
class PTuple(Node):
    items: list[Node]

    def children(self):
        return list(self.items)


PATTERNS = (PVar, PWild, PNil, PInt, PBool, PCons, PTuple)


def head_token(node: Node) -> int:
    """Token standing for ``node`` in the token-level tree."""
    while node.head is None:
        node = node.children()[0]
    return node.head


def subtree_tokens(node: Node) -> list[int]:
    """Sorted indices of every token covered by ``node``."""
    out: list[int] = []
    for sub in node.walk():
        out.extend(sub.toks)
    return sorted(out)
