"""The recursive network over derivation DAGs.

Four block families turn a derivation into clause scores: init embeddings for
input clauses (one per revealed axiom plus unknown and goal), an optional SInE
embedder mixing the clause's SInE level into its init embedding, one deriv block
per inference rule with generic per-arity blocks beside them, and a two-layer
eval head producing a logit. A clause is classified positive when its logit is
at least zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from src.derivation.batch import (
    AxiomTag,
    Batch,
    BatchDerived,
    BatchInitial,
    BatchNode,
    TagKind,
    collapse_key,
    effective_level,
    resolve_tag,
)
from src.derivation.dag import Derived, DerivationDag, Initial
from src.errors import DerivationError, ModelError
from src.prover.rules import RuleId
from src.prover.sine import UNREACHED


DEFAULT_SINE_CAP = 16
GENERIC_ARITIES = (1, 2)

Activation = Callable[[np.ndarray], np.ndarray]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class ModelConfig(BaseModel):
    n: int = 32
    revealed_axioms: list[str] = []
    rules: list[RuleId] = list(RuleId)
    sine_cap: int = DEFAULT_SINE_CAP
    use_sine: bool = True
    has_generic: bool = False

    @field_validator("n", "sine_cap")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("revealed_axioms")
    @classmethod
    def _unique_axioms(cls, value: list[str]) -> list[str]:
        if len(set(value)) != len(value):
            raise ValueError("revealed_axioms contains duplicates")
        return value

    @model_validator(mode="after")
    def _unique_rules(self) -> ModelConfig:
        if len(set(self.rules)) != len(self.rules):
            raise ValueError("rules contains duplicates")
        return self

    @property
    def m(self) -> int:
        return len(self.revealed_axioms)

    @property
    def unknown_row(self) -> int:
        return self.m

    @property
    def goal_row(self) -> int:
        return self.m + 1

    @property
    def key_cap(self) -> Optional[int]:
        """The sine cap as collapse keys see it; None when levels are not an input."""
        return self.sine_cap if self.use_sine else None

    def revealed_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.revealed_axioms)}


def tensor_layout(config: ModelConfig) -> Iterator[tuple[str, tuple[int, ...]]]:
    n = config.n
    yield "init", (config.m + 2, n)
    if config.use_sine:
        yield "sine.W", (n, n + 1)
        yield "sine.b", (n,)
    for rule in config.rules:
        yield f"deriv.{rule.value}.W", (n, rule.arity * n)
        yield f"deriv.{rule.value}.b", (n,)
    for arity in GENERIC_ARITIES:
        yield f"generic.{arity}.W", (n, arity * n)
        yield f"generic.{arity}.b", (n,)
    yield "eval.W1", (n, n)
    yield "eval.b1", (n,)
    yield "eval.w2", (1, n)
    yield "eval.b2", (1,)


def parameter_count(config: ModelConfig) -> int:
    return sum(int(np.prod(shape)) for _, shape in tensor_layout(config))


@dataclass
class ModelParams:
    """Named float64 tensors in a fixed declaration order."""
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    @property
    def size(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def copy(self) -> ModelParams:
        return ModelParams({k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> ModelParams:
        return ModelParams({k: np.zeros_like(v) for k, v in self.tensors.items()})

    def add_scaled(self, other: ModelParams, alpha: float) -> None:
        """In place: self += alpha * other."""
        for name, tensor in self.tensors.items():
            tensor += alpha * other.tensors[name]

    def is_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors.values())


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Seeded initialization: matrices uniform in +-1/sqrt(n), init embeddings normal/sqrt(n), biases 0."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(config.n)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in tensor_layout(config):
        if name == "init":
            tensors[name] = rng.standard_normal(shape) * bound
        elif len(shape) == 2:
            tensors[name] = rng.uniform(-bound, bound, size=shape)
        else:
            tensors[name] = np.zeros(shape)
    return ModelParams(tensors)


@dataclass
class Model:
    config: ModelConfig
    params: ModelParams

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> Model:
        return cls(config, init_params(config, seed))

    def supports(self, rule: RuleId) -> bool:
        return f"deriv.{rule.value}.W" in self.params


# ---------- blocks ----------

def sine_feature(level: Optional[int], sine_cap: int) -> float:
    if level is None or level == UNREACHED:
        return 1.0
    return min(level, sine_cap) / sine_cap


def init_row(tag: AxiomTag, config: ModelConfig) -> int:
    if tag.kind == TagKind.GOAL:
        return config.goal_row
    if tag.kind == TagKind.UNKNOWN:
        return config.unknown_row
    if not 0 <= tag.index < config.m:
        raise ModelError(f"named axiom index {tag.index} outside the revealed table of size {config.m}")
    return tag.index


def embed_initial(
    tag: AxiomTag,
    level: Optional[int],
    params: ModelParams,
    config: ModelConfig,
    activation: Activation = relu,
) -> np.ndarray:
    """S(I_tag, level), or I_tag itself for models without the SInE embedder."""
    base = params["init"][init_row(tag, config)]
    if not config.use_sine:
        return base.copy()
    x = np.append(base, sine_feature(level, config.sine_cap))
    return activation(params["sine.W"] @ x + params["sine.b"])


def deriv_block(rule: RuleId, params: ModelParams, use_generic: bool = False) -> str:
    """Name prefix of the block computing `rule`, possibly its generic stand-in."""
    arity = min(rule.arity, 2)
    if use_generic:
        return f"generic.{arity}"
    prefix = f"deriv.{rule.value}"
    if f"{prefix}.W" not in params:
        raise ModelError(
            f"the model has no block for rule {rule.value!r}; the prover strategy and the model disagree"
        )
    return prefix


def embed_derived(
    rule: RuleId,
    premise_vectors: Sequence[np.ndarray],
    params: ModelParams,
    use_generic: bool = False,
) -> np.ndarray:
    """D_rule over the premise embeddings; three or more premises fold left."""
    if not premise_vectors:
        raise ModelError(f"{rule.value} applied to no premises")
    prefix = deriv_block(rule, params, use_generic)
    W, b = params[f"{prefix}.W"], params[f"{prefix}.b"]
    if len(premise_vectors) == 1:
        return relu(W @ premise_vectors[0] + b)
    acc = relu(W @ np.concatenate(premise_vectors[:2]) + b)
    for v in premise_vectors[2:]:
        acc = relu(W @ np.concatenate((acc, v)) + b)
    return acc


def evaluate(v: np.ndarray, params: ModelParams) -> float:
    hidden = relu(params["eval.W1"] @ v + params["eval.b1"])
    return float((params["eval.w2"] @ hidden + params["eval.b2"])[0])


def classify(v: np.ndarray, params: ModelParams) -> bool:
    return evaluate(v, params) >= 0.0


# ---------- ablations ----------

class Ablation(BaseModel):
    """Evaluation-time overrides showing what a trained model relies on."""
    mask_axioms: bool = False
    generic_rules: bool = False
    fixed_sine: Optional[int] = None

    @field_validator("fixed_sine")
    @classmethod
    def _non_negative(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 0:
            raise ValueError("fixed_sine must be >= 0")
        return value

    def tag(self, tag: AxiomTag) -> AxiomTag:
        if self.mask_axioms and tag.kind == TagKind.NAMED:
            return AxiomTag(TagKind.UNKNOWN)
        return tag

    def level(self, level: int) -> int:
        # goal nodes included
        return level if self.fixed_sine is None else self.fixed_sine


NO_ABLATION = Ablation()


# ---------- memoized evaluation ----------

class EmbeddingCache:
    """Hash-consed nodes with lazily computed embeddings and scores.

    Keys are collapse keys whose premises are this cache's own node indices,
    so a hit means the whole sub-derivation is indistinguishable.
    """

    def __init__(self, model: Model, ablation: Ablation = NO_ABLATION, generic_fallback: bool = False):
        self.model = model
        self.ablation = ablation
        self.generic_fallback = generic_fallback
        self.revealed = model.config.revealed_index()
        self.index: dict[tuple, int] = {}
        self.nodes: list[BatchNode] = []
        self.vectors: list[Optional[np.ndarray]] = []
        self.scores: list[Optional[float]] = []
        self.embeddings = 0
        self.evaluations = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def _intern(self, key: tuple, node: BatchNode) -> int:
        found = self.index.get(key)
        if found is None:
            found = self.index[key] = len(self.nodes)
            self.nodes.append(node)
            self.vectors.append(None)
            self.scores.append(None)
        return found

    def add_initial(self, axiom: str, level: int) -> int:
        tag = self.ablation.tag(resolve_tag(axiom, self.revealed))
        level = effective_level(self.ablation.level(level), self.model.config.key_cap)
        return self._intern(("I", tag, level), BatchInitial(tag, level))

    def add_derived(self, rule: RuleId, premises: Sequence[int]) -> int:
        premises = tuple(premises)
        return self._intern(("D", rule, premises), BatchDerived(rule, premises))

    def _use_generic(self, rule: RuleId) -> bool:
        if self.ablation.generic_rules:
            return True
        return self.generic_fallback and not self.model.supports(rule)

    def vector(self, k: int) -> np.ndarray:
        """Embedding of node k, computing missing premises bottom-up first."""
        stack = [k]
        while stack:
            top = stack[-1]
            if self.vectors[top] is not None:
                stack.pop()
                continue
            node = self.nodes[top]
            if isinstance(node, BatchDerived):
                pending = [p for p in node.premises if self.vectors[p] is None]
                if pending:
                    stack.extend(pending)
                    continue
                vec = embed_derived(
                    node.rule,
                    [self.vectors[p] for p in node.premises],
                    self.model.params,
                    self._use_generic(node.rule),
                )
            else:
                vec = embed_initial(node.tag, node.level, self.model.params, self.model.config)
            self.vectors[top] = vec
            self.embeddings += 1
            stack.pop()
        return self.vectors[k]

    def score(self, k: int) -> float:
        if self.scores[k] is None:
            self.scores[k] = evaluate(self.vector(k), self.model.params)
            self.evaluations += 1
        return self.scores[k]


def forward_dag(
    source: Union[Batch, DerivationDag],
    model: Model,
    cache: Optional[EmbeddingCache] = None,
) -> dict[int, tuple[np.ndarray, float]]:
    """Embed and score every node of a batch or a derivation in one bottom-up pass.

    Returns node -> (vector, score), keyed by batch index or derivation node id.

    Raises:
        ModelError: on a cycle or a rule the model cannot embed
    """
    cache = cache if cache is not None else EmbeddingCache(model)
    mapping: dict[int, int] = {}
    if isinstance(source, Batch):
        for k, node in enumerate(source.nodes):
            if isinstance(node, BatchInitial):
                mapping[k] = cache._intern(("I", node.tag, node.level), node)
            else:
                mapping[k] = cache.add_derived(node.rule, [mapping[p] for p in node.premises])
    else:
        try:
            order = source.topological_order()
        except DerivationError as e:
            raise ModelError(str(e))
        for node_id in order:
            label = source.nodes[node_id]
            if isinstance(label, Initial):
                mapping[node_id] = cache.add_initial(label.axiom, label.sine_level)
            else:
                mapping[node_id] = cache.add_derived(label.rule, [mapping[p] for p in label.premises])
    return {node: (cache.vector(k), cache.score(k)) for node, k in mapping.items()}


def node_keys(dag: DerivationDag, config: ModelConfig) -> dict[int, tuple]:
    """Nested collapse keys of a derivation's nodes, for comparing collapsing against values."""
    revealed = config.revealed_index()
    keys: dict[int, tuple] = {}
    for node_id in dag.topological_order():
        label = dag.nodes[node_id]
        premise_keys = tuple(keys[p] for p in label.premises) if isinstance(label, Derived) else ()
        keys[node_id] = collapse_key(label, premise_keys, revealed, config.key_cap)
    return keys
