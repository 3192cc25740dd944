"""Mini-ML front end: lexing, parsing, inference, blame, tree distances."""
from .ast import Node, head_token, subtree_tokens
from .blame import WellTyped, compiler_blame
from .infer import TypeErrorReport, UnboundVariable, infer, infer_annotated, is_well_typed
from .lexer import LexError, Token, tokenize
from .parser import ParseError, parse
from .pretty import pretty
from .tree import gold_edges, tree_distance_matrix
from .types import BOOL, INT, MonoType, TBool, TFun, TInt, TList, TTuple, TVar

__all__ = [
    "BOOL", "INT", "LexError", "MonoType", "Node", "ParseError", "TBool", "TFun", "TInt",
    "TList", "TTuple", "TVar", "Token", "TypeErrorReport", "UnboundVariable", "WellTyped",
    "compiler_blame", "gold_edges", "head_token", "infer", "infer_annotated",
    "is_well_typed", "parse", "pretty", "subtree_tokens", "tokenize", "tree_distance_matrix",
]
