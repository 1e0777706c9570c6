"""Recursive network over derivations, prover guidance and model files."""
from .network import (
    NO_ABLATION,
    Ablation,
    EmbeddingCache,
    Model,
    ModelConfig,
    ModelParams,
    classify,
    embed_derived,
    embed_initial,
    evaluate,
    forward_dag,
    init_params,
    parameter_count,
)
from .guidance import GuidanceSession, ModelGuidance
from .serialize import FORMAT_VERSION, dumps_model, load_model, loads_model, save_model

__all__ = [
    "FORMAT_VERSION",
    "NO_ABLATION",
    "Ablation",
    "EmbeddingCache",
    "GuidanceSession",
    "Model",
    "ModelConfig",
    "ModelGuidance",
    "ModelParams",
    "classify",
    "dumps_model",
    "embed_derived",
    "embed_initial",
    "evaluate",
    "forward_dag",
    "init_params",
    "load_model",
    "loads_model",
    "parameter_count",
    "save_model",
]
