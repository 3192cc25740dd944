"""Synthetic supervision: seed programs, mutants, labels, and storage."""
from .build import (
    CorpusManifest,
    FormatError,
    ProgramPair,
    build_corpus,
    derive_seed,
    generate_sources,
    load_jsonl,
    save_jsonl,
    summarize,
)
from .diff import diff_labels, lcs_matches
from .mutate import OPERATORS, Mutation, NoViableMutation, mutate
from .templates import FAMILIES, GeneratorBug, generate_seed_program

__all__ = [
    "FAMILIES", "OPERATORS", "CorpusManifest", "FormatError", "GeneratorBug", "Mutation",
    "NoViableMutation", "ProgramPair", "build_corpus", "derive_seed", "diff_labels",
    "generate_seed_program", "generate_sources", "lcs_matches", "load_jsonl", "mutate",
    "save_jsonl", "summarize",
]
