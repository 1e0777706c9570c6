"""Given-clause saturation that records every kept clause into a derivation DAG."""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Optional

from pydantic import BaseModel, field_validator

from src.derivation.dag import GOAL, DerivationDag, Derived
from src.errors import DerivationError
from src.logic.terms import Clause, Problem, Role, is_tautology, rename_apart
from .rules import RuleId, all_factors, all_resolvents, subsumes, subsumption_resolve
from .selection import GuidanceContext, LayeredSelector, SelectorConfig
from .sine import SineLevels, sine_levels

logger = logging.getLogger(__name__)


class Outcome(str, Enum):
    PROOF = "proof"
    SATURATED = "saturated"
    LIMIT_REACHED = "limit_reached"


class Limits(BaseModel):
    max_selections: int = 2000
    wall_time: Optional[float] = None

    @field_validator("max_selections")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 0:
            raise ValueError("max_selections must be >= 0")
        return value


class ProverStats(BaseModel):
    selections: int = 0
    generated: int = 0
    retained: int = 0
    model_evaluations: int = 0
    model_eval_time: float = 0.0
    wall_time: float = 0.0


class TraceEntry(NamedTuple):
    tick: int
    source: str
    clause_id: int

    def __str__(self) -> str:
        return f"{self.tick}, {self.source}, {self.clause_id}"


@dataclass
class ProverResult:
    outcome: Outcome
    dag: DerivationDag
    clauses: dict[int, Clause]
    sine: SineLevels
    stats: ProverStats = field(default_factory=ProverStats)
    trace: list[TraceEntry] = field(default_factory=list)
    empty_clause_id: Optional[int] = None

    @property
    def solved(self) -> bool:
        return self.outcome == Outcome.PROOF


def _signature(clause: Clause) -> frozenset:
    return frozenset((lit.positive, lit.predicate) for lit in clause.literals)


class ProvingState:
    """Processed clauses, the layered selector and the recorded derivation of one attempt."""

    def __init__(self, problem: Problem, config: SelectorConfig):
        self.problem = problem
        self.config = config
        self.sine = sine_levels(problem, config.sine_tolerance)
        self.guide: Optional[GuidanceContext] = None
        if config.guidance is not None:
            self.guide = config.guidance.context(generic_fallback=config.generic_fallback)
        self.selector = LayeredSelector(config)
        self.dag = DerivationDag(problem.name)
        self.clauses: dict[int, Clause] = {}
        self.kept: dict[int, tuple[Clause, frozenset]] = {}
        self.processed: list[Clause] = []
        self.stats = ProverStats()
        self.trace: list[TraceEntry] = []
        self.next_id = len(problem.clauses)

    # ----- bookkeeping -----
    def _enqueue(self, clause: Clause) -> None:
        self.kept[clause.id] = (clause, _signature(clause))
        positive = self.guide.classify(clause) if self.guide is not None else False
        self.selector.add(clause, positive)

    def _record(self, clause: Clause) -> Clause:
        clause = clause.with_id(self.next_id)
        self.next_id += 1
        self.dag.add_derived(clause.id, clause.origin.rule, clause.origin.premises)
        self.clauses[clause.id] = clause
        self.stats.retained += 1
        if self.guide is not None:
            self.guide.record(clause)
        return clause

    def _subsumed(self, clause: Clause) -> bool:
        sig = _signature(clause)
        for other, other_sig in self.kept.values():
            # the length condition keeps factors from being subsumed by their parents
            if len(other) <= len(clause) and other_sig <= sig and subsumes(other, clause):
                return True
        return False

    # ----- main loop -----
    def add_inputs(self) -> Optional[int]:
        """Record input clauses; returns the id of an empty input clause if any."""
        for clause in self.problem.clauses:
            axiom = GOAL if clause.origin.role == Role.NEGATED_CONJECTURE else clause.origin.name
            self.dag.add_initial(clause.id, axiom, self.sine[clause.id])
            self.clauses[clause.id] = clause
            if self.guide is not None:
                self.guide.record(clause, self.sine[clause.id])
        for clause in self.problem.clauses:
            if clause.is_empty:
                return clause.id
        for clause in self.problem.clauses:
            if not is_tautology(clause):
                self._enqueue(clause)
        return None

    def generate(self, given: Clause) -> Iterator[Clause]:
        for other in self.processed:
            renamed = rename_apart(given, other.max_var() + 1)
            yield from all_resolvents(other, renamed)
        yield from all_factors(given)

    def retain(self, conclusion: Clause) -> Optional[Clause]:
        """Forward-simplify a conclusion; returns the kept clause or None."""
        self.stats.generated += 1
        if is_tautology(conclusion) or self._subsumed(conclusion):
            return None
        clause = self._record(conclusion)
        simplified = True
        while simplified and not clause.is_empty:
            simplified = False
            for side in self.processed:
                reduced = subsumption_resolve(clause, side)
                if reduced is None:
                    continue
                self.stats.generated += 1
                if not reduced.is_empty and self._subsumed(reduced):
                    return None
                clause = self._record(reduced)
                simplified = True
                break
        if not clause.is_empty:
            self._enqueue(clause)
        return clause

    def run(self, limits: Limits) -> ProverResult:
        start = time.perf_counter()
        empty = self.add_inputs()
        outcome = Outcome.PROOF if empty is not None else None
        while outcome is None:
            if self.stats.selections >= limits.max_selections:
                outcome = Outcome.LIMIT_REACHED
                break
            if limits.wall_time is not None and time.perf_counter() - start > limits.wall_time:
                outcome = Outcome.LIMIT_REACHED
                break
            if not self.selector:
                outcome = Outcome.SATURATED
                break
            given, source = self.selector.select()
            self.trace.append(TraceEntry(self.selector.tick, source, given.id))
            self.dag.mark_selected(given.id)
            self.stats.selections += 1
            self.processed.append(given)
            for conclusion in self.generate(given):
                kept = self.retain(conclusion)
                if kept is not None and kept.is_empty:
                    empty = kept.id
                    outcome = Outcome.PROOF
                    break

        if empty is not None:
            self.dag.set_proof(empty)
        if self.guide is not None:
            self.stats.model_evaluations = self.guide.evaluations
            self.stats.model_eval_time = self.guide.eval_time
        self.stats.wall_time = max(time.perf_counter() - start, self.stats.model_eval_time)
        logger.debug(
            f"[PROVE] {self.problem.name}: {outcome.value} after {self.stats.selections} selections"
        )
        return ProverResult(
            outcome, self.dag, self.clauses, self.sine, self.stats, self.trace, empty
        )


def saturate(
    problem: Problem,
    config: Optional[SelectorConfig] = None,
    limits: Optional[Limits] = None,
) -> ProverResult:
    """Run the given-clause loop until the empty clause, saturation or a limit."""
    return ProvingState(problem, config or SelectorConfig()).run(limits or Limits())


def replay(result: ProverResult) -> bool:
    """Re-execute every recorded inference of the proof and compare conclusions.

    Raises:
        DerivationError: if there is no proof or an inference does not reproduce its node
    """
    dag = result.dag
    if dag.proof is None or result.empty_clause_id is None:
        raise DerivationError(f"{dag.problem_name}: nothing to replay, no proof recorded")
    if not result.clauses[result.empty_clause_id].is_empty:
        raise DerivationError(f"{dag.problem_name}: proof does not end in the empty clause")
    for node_id in dag.topological_order():
        if node_id not in dag.proof:
            continue
        label = dag.nodes[node_id]
        if not isinstance(label, Derived):
            continue
        expected = result.clauses[node_id].literals
        premises = [result.clauses[p] for p in label.premises]
        if label.rule == RuleId.RESOLUTION:
            first, second = premises
            candidates = all_resolvents(first, rename_apart(second, first.max_var() + 1))
        elif label.rule == RuleId.FACTORING:
            candidates = all_factors(premises[0])
        else:
            reduced = subsumption_resolve(*premises)
            candidates = iter([reduced] if reduced is not None else [])
        if not any(c.literals == expected for c in candidates):
            raise DerivationError(
                f"{dag.problem_name}: node {node_id} does not follow by {label.rule.value}"
            )
    return True
