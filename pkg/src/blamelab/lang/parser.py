"""Recursive-descent parser for the mini-ML dialect.

Grammar (lowest precedence first)::

    program  := decl+ | expr                 decl := let [rec] x p* = expr
    expr     := let [rec] x p* = expr in expr
              | fun x+ -> expr | if expr then expr else expr
              | match expr with [|] pat -> expr (| pat -> expr)*
              | or
    or       := and [|| or]          and := cmp [&& and]
    cmp      := cons ((= | < | <=) cons)*
    cons     := add [:: cons]        add := mul ((+ | -) mul)*
    mul      := app (* app)*         app := atom atom*
    atom     := int | bool | x | [] | [e; ...] | (e) | (e, e, ...)
    pat      := patom [:: pat]
    patom    := x | _ | [] | int | bool | (pat) | (pat, pat, ...)
"""
from __future__ import annotations

from typing import Sequence

from . import ast as A
from .lexer import Token


class ParseError(ValueError):
    def __init__(self, index: int, expected: set[str], found: str):
        self.index = index
        self.expected = set(expected)
        self.found = found
        super().__init__(f"token {index}: expected one of {sorted(self.expected)}, found {found!r}")


_ATOM_START_KINDS = {"int_literal", "bool_literal", "identifier"}
_ATOM_START_TEXTS = {"(", "[", "[]"}


class _Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.toks = list(tokens)
        self.pos = 0

    # -- helpers -------------------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.toks[i] if i < len(self.toks) else None

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind != "identifier" and tok.text in texts

    def fail(self, expected) -> None:
        tok = self.peek()
        raise ParseError(self.pos, set(expected), tok.text if tok else "<eof>")

    def expect(self, text: str) -> int:
        if not self.at(text):
            self.fail({text})
        self.pos += 1
        return self.pos - 1

    def expect_ident(self) -> int:
        tok = self.peek()
        if tok is None or tok.kind != "identifier":
            self.fail({"<identifier>"})
        self.pos += 1
        return self.pos - 1

    def starts_atom(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        return tok.kind in _ATOM_START_KINDS or (tok.kind == "delimiter" and tok.text in _ATOM_START_TEXTS)

    # -- program -------------------------------------------------------------

    def program(self) -> A.Node:
        if not self.toks:
            self.fail({"<expression>"})
        if not self.at("let"):
            node = self.expr()
            self.eof()
            return node
        node = self.let_form(toplevel=True)
        self.eof()
        return node

    def eof(self) -> None:
        if self.pos != len(self.toks):
            self.fail({"<eof>"})

    # -- expressions ---------------------------------------------------------

    def expr(self) -> A.Node:
        if self.at("let"):
            return self.let_form(toplevel=False)
        if self.at("fun"):
            return self.fun_form()
        if self.at("if"):
            return self.if_form()
        if self.at("match"):
            return self.match_form()
        return self.or_expr()

    def let_form(self, toplevel: bool) -> A.Node:
        toks = [self.expect("let")]
        rec = self.at("rec")
        if rec:
            toks.append(self.expect("rec"))
        name_tok = self.expect_ident()
        toks.append(name_tok)
        params = []
        while self.peek() is not None and self.peek().kind == "identifier":
            params.append(self.expect_ident())
        toks.append(self.expect("="))
        value = self.expr()
        for p in reversed(params):
            value = A.Fun(self.toks[p].text, p, value, style="let", toks=[p], head=p)
        if self.at("in"):
            toks.append(self.expect("in"))
            body = self.expr()
            is_top = False
        elif toplevel:
            body = self.let_form(toplevel=True) if self.at("let") else None
            is_top = True
        else:
            self.fail({"in"})
        cls = A.LetRec if rec else A.Let
        return cls(self.toks[name_tok].text, name_tok, value, body, toplevel=is_top, toks=toks, head=toks[0])

    def fun_form(self) -> A.Node:
        fun_tok = self.expect("fun")
        params = [self.expect_ident()]
        while self.peek() is not None and self.peek().kind == "identifier":
            params.append(self.expect_ident())
        arrow = self.expect("->")
        body = self.expr()
        for k in range(len(params) - 1, -1, -1):
            p = params[k]
            toks = [p]
            if k == 0:
                toks.insert(0, fun_tok)
            if k == len(params) - 1:
                toks.append(arrow)
            body = A.Fun(
                self.toks[p].text, p, body, style="fun" if k == 0 else "more", toks=toks, head=toks[0]
            )
        return body

    def if_form(self) -> A.Node:
        t_if = self.expect("if")
        cond = self.expr()
        t_then = self.expect("then")
        then = self.expr()
        t_else = self.expect("else")
        orelse = self.expr()
        return A.If(cond, then, orelse, toks=[t_if, t_then, t_else], head=t_if)

    def match_form(self) -> A.Node:
        toks = [self.expect("match")]
        scrutinee = self.expr()
        toks.append(self.expect("with"))
        leading = self.at("|")
        if leading:
            toks.append(self.expect("|"))
        arms = []
        while True:
            pat = self.pattern()
            toks.append(self.expect("->"))
            body = self.expr()
            arms.append((pat, body))
            if not self.at("|"):
                break
            toks.append(self.expect("|"))
        return A.Match(scrutinee, arms, leading_bar=leading, toks=toks, head=toks[0])

    def or_expr(self) -> A.Node:
        left = self.and_expr()
        if self.at("||"):
            op = self.expect("||")
            return A.BinOp("||", left, self.or_expr(), toks=[op], head=op)
        return left

    def and_expr(self) -> A.Node:
        left = self.cmp_expr()
        if self.at("&&"):
            op = self.expect("&&")
            return A.BinOp("&&", left, self.and_expr(), toks=[op], head=op)
        return left

    def cmp_expr(self) -> A.Node:
        left = self.cons_expr()
        while self.at("=", "<", "<="):
            op = self.pos
            self.pos += 1
            left = A.BinOp(self.toks[op].text, left, self.cons_expr(), toks=[op], head=op)
        return left

    def cons_expr(self) -> A.Node:
        left = self.add_expr()
        if self.at("::"):
            op = self.expect("::")
            return A.Cons(left, self.cons_expr(), toks=[op], head=op)
        return left

    def add_expr(self) -> A.Node:
        left = self.mul_expr()
        while self.at("+", "-"):
            op = self.pos
            self.pos += 1
            left = A.BinOp(self.toks[op].text, left, self.mul_expr(), toks=[op], head=op)
        return left

    def mul_expr(self) -> A.Node:
        left = self.app_expr()
        while self.at("*"):
            op = self.expect("*")
            left = A.BinOp("*", left, self.app_expr(), toks=[op], head=op)
        return left

    def app_expr(self) -> A.Node:
        node = self.atom()
        while self.starts_atom():
            node = A.App(node, self.atom())
        return node

    def atom(self) -> A.Node:
        tok = self.peek()
        if tok is None:
            self.fail({"<expression>"})
        i = self.pos
        if tok.kind == "int_literal":
            self.pos += 1
            return A.IntLit(i, int(tok.text), toks=[i], head=i)
        if tok.kind == "bool_literal":
            self.pos += 1
            return A.BoolLit(i, tok.text == "true", toks=[i], head=i)
        if tok.kind == "identifier":
            self.pos += 1
            return A.Var(i, tok.text, toks=[i], head=i)
        if self.at("[]"):
            self.pos += 1
            return A.ListLit([], toks=[i], head=i)
        if self.at("["):
            toks = [self.expect("[")]
            items = [self.expr()]
            while self.at(";"):
                toks.append(self.expect(";"))
                items.append(self.expr())
            toks.append(self.expect("]"))
            return A.ListLit(items, toks=toks, head=toks[0])
        if self.at("("):
            lp = self.expect("(")
            inner = self.expr()
            if self.at(","):
                toks = [lp]
                items = [inner]
                while self.at(","):
                    toks.append(self.expect(","))
                    items.append(self.expr())
                toks.append(self.expect(")"))
                return A.Tuple(items, toks=toks, head=toks[1])
            rp = self.expect(")")
            inner.toks.extend((lp, rp))
            inner.parens += 1
            return inner
        self.fail({"<expression>"})

    # -- patterns ------------------------------------------------------------

    def pattern(self) -> A.Node:
        left = self.pattern_atom()
        if self.at("::"):
            op = self.expect("::")
            return A.PCons(left, self.pattern(), toks=[op], head=op)
        return left

    def pattern_atom(self) -> A.Node:
        tok = self.peek()
        if tok is None:
            self.fail({"<pattern>"})
        i = self.pos
        if tok.kind == "identifier":
            self.pos += 1
            return A.PVar(i, tok.text, toks=[i], head=i)
        if tok.kind == "int_literal":
            self.pos += 1
            return A.PInt(i, int(tok.text), toks=[i], head=i)
        if tok.kind == "bool_literal":
            self.pos += 1
            return A.PBool(i, tok.text == "true", toks=[i], head=i)
        if self.at("_"):
            self.pos += 1
            return A.PWild(i, toks=[i], head=i)
        if self.at("[]"):
            self.pos += 1
            return A.PNil(i, toks=[i], head=i)
        if self.at("("):
            lp = self.expect("(")
            inner = self.pattern()
            if self.at(","):
                toks = [lp]
                items = [inner]
                while self.at(","):
                    toks.append(self.expect(","))
                    items.append(self.pattern())
                toks.append(self.expect(")"))
                return A.PTuple(items, toks=toks, head=toks[1])
            rp = self.expect(")")
            inner.toks.extend((lp, rp))
            inner.parens += 1
            return inner
        self.fail({"<pattern>"})


def _assign_spans(root: A.Node, tokens: Sequence[Token]) -> None:
    # post-order so children are done before parents
    order = list(root.walk())
    for node in reversed(order):
        lo = [tokens[t].start for t in node.toks]
        hi = [tokens[t].end for t in node.toks]
        for child in node.children():
            lo.append(child.span[0])
            hi.append(child.span[1])
        node.span = (min(lo), max(hi))


def parse(tokens: Sequence[Token]) -> A.Node:
    """Parse a token sequence into a syntax tree with spans filled in."""
    root = _Parser(tokens).program()
    _assign_spans(root, tokens)
    return root
