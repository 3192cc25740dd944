"""The compiler baseline: blame whatever the type checker reports first."""
from __future__ import annotations

import numpy as np

from .infer import TypeErrorReport, infer
from .lexer import tokenize
from .parser import parse


class WellTyped(ValueError):
    """Raised when asking for compiler blame on a program that type-checks."""


def compiler_blame(program_source: str) -> np.ndarray:
    tokens = tokenize(program_source)
    result = infer(parse(tokens))
    if not isinstance(result, TypeErrorReport):
        raise WellTyped(f"program is well-typed: {result}")
    labels = np.zeros(len(tokens), dtype=np.int8)
    labels[sorted(result.blamed_token_indices)] = 1
    return labels
