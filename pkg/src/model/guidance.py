"""Plugging a trained model into the prover's layered clause selection."""
import time

from src.derivation.dag import GOAL
from src.errors import ModelError
from src.logic.terms import Clause, Role
from src.prover.rules import RuleId
from .network import NO_ABLATION, Ablation, EmbeddingCache, Model


class ModelGuidance:
    """Shared, read-only model; hands out one embedding cache per proof attempt."""

    def __init__(self, model: Model, ablation: Ablation = NO_ABLATION):
        self.model = model
        self.ablation = ablation
        if ablation.generic_rules and not model.config.has_generic:
            raise ModelError("generic_rules needs a model whose generic blocks were trained (swapout > 0)")

    def context(self, generic_fallback: bool = False) -> "GuidanceSession":
        missing = [r for r in RuleId if not self.model.supports(r)]
        if missing and not (generic_fallback or self.ablation.generic_rules):
            names = ", ".join(r.value for r in missing)
            raise ModelError(f"the prover applies rules the model was not trained on: {names}")
        if missing and not self.model.config.has_generic:
            raise ModelError("generic fallback needs a model whose generic blocks were trained")
        return GuidanceSession(self.model, self.ablation, generic_fallback)


class GuidanceSession:
    """Per-attempt node table: clause id -> cache node, scores computed on demand."""

    def __init__(self, model: Model, ablation: Ablation, generic_fallback: bool):
        # never shared across attempts: a sweep runs one attempt per worker task
        # and the cache is dropped with the session once that attempt ends
        self.cache = EmbeddingCache(model, ablation, generic_fallback)
        self.node_of: dict[int, int] = {}
        self.eval_time = 0.0

    @property
    def evaluations(self) -> int:
        return self.cache.evaluations

    def record(self, clause: Clause, sine_level: int = 0) -> None:
        origin = clause.origin
        if origin.is_input:
            axiom = GOAL if origin.role == Role.NEGATED_CONJECTURE else origin.name
            self.node_of[clause.id] = self.cache.add_initial(axiom, sine_level)
        else:
            premises = [self.node_of[p] for p in origin.premises]
            self.node_of[clause.id] = self.cache.add_derived(origin.rule, premises)

    def classify(self, clause: Clause) -> bool:
        start = time.perf_counter()
        try:
            return self.cache.score(self.node_of[clause.id]) >= 0.0
        finally:
            self.eval_time += time.perf_counter() - start
