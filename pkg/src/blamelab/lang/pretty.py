"""Render a syntax tree back to source text."""
from __future__ import annotations

from . import ast as A


def _wrap(node: A.Node, text: str) -> str:
    for _ in range(node.parens):
        text = f"({text})"
    return text


def _fun_chain(node: A.Node, style: str) -> tuple[list[str], A.Node]:
    names = []
    while isinstance(node, A.Fun) and node.style == style and not node.parens:
        names.append(node.name)
        node = node.body
    return names, node


def pretty(node: A.Node) -> str:
    return _wrap(node, _pretty(node))


def _pretty(node: A.Node) -> str:
    if isinstance(node, (A.IntLit, A.PInt)):
        return str(node.value)
    if isinstance(node, (A.BoolLit, A.PBool)):
        return "true" if node.value else "false"
    if isinstance(node, (A.Var, A.PVar)):
        return node.name
    if isinstance(node, A.PWild):
        return "_"
    if isinstance(node, A.PNil):
        return "[]"
    if isinstance(node, A.Fun):
        names = [node.name]
        rest, body = _fun_chain(node.body, "more")
        return f"fun {' '.join(names + rest)} -> {pretty(body)}"
    if isinstance(node, A.App):
        return f"{pretty(node.fn)} {pretty(node.arg)}"
    if isinstance(node, A.Let):
        params, value = _fun_chain(node.value, "let")
        head = "let rec" if isinstance(node, A.LetRec) else "let"
        lhs = " ".join([head, node.name] + params)
        text = f"{lhs} = {pretty(value)}"
        if node.body is None:
            return text
        if node.toplevel:
            return f"{text}\n{pretty(node.body)}"
        return f"{text} in {pretty(node.body)}"
    if isinstance(node, A.If):
        return f"if {pretty(node.cond)} then {pretty(node.then)} else {pretty(node.orelse)}"
    if isinstance(node, A.Match):
        arms = [f"{pretty(p)} -> {pretty(b)}" for p, b in node.arms]
        body = " | ".join(arms)
        return f"match {pretty(node.scrutinee)} with {'| ' if node.leading_bar else ''}{body}"
    if isinstance(node, A.ListLit):
        if not node.items:
            return "[]"
        return "[" + "; ".join(pretty(i) for i in node.items) + "]"
    if isinstance(node, A.Cons):
        return f"{pretty(node.head_expr)} :: {pretty(node.tail)}"
    if isinstance(node, A.PCons):
        return f"{pretty(node.head_pat)} :: {pretty(node.tail)}"
    if isinstance(node, A.BinOp):
        return f"{pretty(node.left)} {node.op} {pretty(node.right)}"
    if isinstance(node, (A.Tuple, A.PTuple)):
        return "(" + ", ".join(pretty(i) for i in node.items) + ")"
    raise TypeError(f"cannot print {type(node).__name__}")
