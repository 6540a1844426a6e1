"""Python bindings for the ragbench engine."""

from ._core import (  # noqa: F401
    ConfigError,
    Error,
    InvalidInputError,
    MockBackend,
    SparseIndex,
    accuracy,
    chunk_document,
    micro_f1,
    parse_mcq_answer,
    parse_ner_json,
    parse_ynm,
    presets,
    relative_change,
    round1,
    run_cli,
    split_sentences,
)

__all__ = [
    "ConfigError",
    "Error",
    "InvalidInputError",
    "MockBackend",
    "SparseIndex",
    "accuracy",
    "chunk_document",
    "micro_f1",
    "parse_mcq_answer",
    "parse_ner_json",
    "parse_ynm",
    "presets",
    "relative_change",
    "round1",
    "run_cli",
    "split_sentences",
]
