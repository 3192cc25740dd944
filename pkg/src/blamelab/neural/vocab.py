"""Token vocabulary with alpha-renamed identifiers and bucketed literals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..lang.lexer import BOOLS, DELIMITERS, KEYWORDS, OPERATORS

PAD, MASK, UNK = 0, 1, 2
IDENT_POOL = 64
INT_BUCKETS = ("<int:0>", "<int:1>", "<int:2-9>", "<int:10+>")


class TooLong(ValueError):
    pass


def _int_bucket(text: str) -> str:
    v = int(text)
    if v <= 1:
        return INT_BUCKETS[v]
    return INT_BUCKETS[2] if v < 10 else INT_BUCKETS[3]


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[str, ...]

    @classmethod
    def default(cls) -> "Vocabulary":
        fixed = sorted(KEYWORDS) + sorted(BOOLS) + list(OPERATORS) + list(DELIMITERS)
        idents = [f"<id:{i}>" for i in range(IDENT_POOL)]
        return cls(tuple(["<pad>", "<mask>", "<unk>"] + fixed + list(INT_BUCKETS) + idents))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def token_class(self, text: str, idents: dict[str, int]) -> str:
        if text in KEYWORDS or text in BOOLS or text in OPERATORS or text in DELIMITERS:
            return text
        if text.isdigit():
            return _int_bucket(text)
        # identifiers: numbered by first occurrence within the program
        if text not in idents:
            idents[text] = len(idents)
        k = idents[text]
        return f"<id:{k}>" if k < IDENT_POOL else "<unk>"

    def encode(self, texts: Sequence[str], max_len: int | None = None) -> np.ndarray:
        if max_len is not None and len(texts) > max_len:
            raise TooLong(f"{len(texts)} tokens exceeds max_len={max_len}")
        idx = _INDEX[self.symbols] if self.symbols in _INDEX else _INDEX.setdefault(self.symbols, self.index())
        idents: dict[str, int] = {}
        return np.array([idx[self.token_class(t, idents)] for t in texts], dtype=np.int64)

    def decode(self, ids) -> list[str]:
        return [self.symbols[int(i)] for i in ids]


_INDEX: dict[tuple, dict[str, int]] = {}
DEFAULT_VOCAB = Vocabulary.default()


def _texts(tokens) -> list[str]:
    return [t if isinstance(t, str) else t.text for t in tokens]


def encode_tokens(tokens, vocab: Vocabulary = DEFAULT_VOCAB, max_len: int | None = None):
    """Ids and attention mask for one program (no padding)."""
    ids = vocab.encode(_texts(tokens), max_len)
    return ids, np.ones(len(ids), dtype=np.int8)


def pad_batch(seqs: Sequence[np.ndarray], pad: int = PAD) -> tuple[np.ndarray, np.ndarray]:
    """Stack variable-length id arrays into (B, T_max) ids and a 0/1 mask."""
    t = max((len(s) for s in seqs), default=0)
    ids = np.full((len(seqs), t), pad, dtype=np.int64)
    mask = np.zeros((len(seqs), t), dtype=np.int8)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = 1
    return ids, mask
