"""Derivation DAGs, training labels, logs and merged batches."""
from .dag import (
    GOAL,
    UNKNOWN,
    Derived,
    DerivationDag,
    Initial,
    NodeLabel,
    TrainExample,
    extract_proof,
    label_dag,
    merge_dags,
)
from .batch import (
    AxiomTag,
    Batch,
    BatchBuilder,
    BatchDerived,
    BatchInitial,
    TagKind,
    build_batches,
    collapse_key,
    merge_batch,
    pack,
    resolve_tag,
)
from .log import format_log, parse_log, read_log, write_log

__all__ = [
    "GOAL",
    "UNKNOWN",
    "AxiomTag",
    "Batch",
    "BatchBuilder",
    "BatchDerived",
    "BatchInitial",
    "Derived",
    "DerivationDag",
    "Initial",
    "NodeLabel",
    "TagKind",
    "TrainExample",
    "build_batches",
    "collapse_key",
    "extract_proof",
    "format_log",
    "label_dag",
    "merge_batch",
    "merge_dags",
    "pack",
    "parse_log",
    "read_log",
    "resolve_tag",
    "write_log",
]
