"""Tokenizer for the mini-ML dialect."""
from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset({"let", "rec", "in", "fun", "if", "then", "else", "match", "with", "_"})
BOOLS = frozenset({"true", "false"})
OPERATORS = ("<=", "&&", "||", "::", "+", "-", "*", "<", "=")
DELIMITERS = ("[]", "->", "(", ")", "[", "]", ",", ";", "|")

# maximal munch: "||" before "|", "->" before "-", "[]" before "["
_SYMBOLS = tuple(sorted(OPERATORS + DELIMITERS, key=len, reverse=True))

KINDS = ("keyword", "identifier", "int_literal", "bool_literal", "operator", "delimiter")


class LexError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    line: int
    col: int
    kind: str

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ch.isdigit() or ch == "'"


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens; comments and whitespace are dropped.

    Offsets are byte offsets into the UTF-8 encoding of ``source``. The
    language itself is ASCII, so non-ASCII text can only appear in comments.
    """
    # character index -> byte offset, only needed when the text is not ASCII
    if source.isascii():
        boff = None
    else:
        boff = [0]
        for ch in source:
            boff.append(boff[-1] + len(ch.encode("utf-8")))

    def at(i: int) -> int:
        return i if boff is None else boff[i]

    tokens: list[Token] = []
    i, n = 0, len(source)
    line, line_start = 1, 0

    def push(text: str, start: int, kind: str) -> None:
        tokens.append(Token(text, at(start), at(start + len(text)), line, start - line_start + 1, kind))

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line, line_start = line + 1, i
            continue
        if ch in " \t\r":
            i += 1
            continue
        if source.startswith("(*", i):
            depth, j = 1, i + 2
            while j < n and depth:
                if source.startswith("(*", j):
                    depth, j = depth + 1, j + 2
                elif source.startswith("*)", j):
                    depth, j = depth - 1, j + 2
                else:
                    if source[j] == "\n":
                        line, line_start = line + 1, j + 1
                    j += 1
            if depth:
                raise LexError("unterminated comment", at(i))
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            push(source[i:j], i, "int_literal")
            i = j
            continue
        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_char(source[j]):
                j += 1
            word = source[i:j]
            if word in KEYWORDS:
                kind = "keyword"
            elif word in BOOLS:
                kind = "bool_literal"
            else:
                kind = "identifier"
            push(word, i, kind)
            i = j
            continue
        for op in _SYMBOLS:
            if source.startswith(op, i):
                push(op, i, "delimiter" if op in DELIMITERS else "operator")
                i += len(op)
                break
        else:
            raise LexError(f"illegal character {ch!r}", at(i))
    return tokens
