"""Clause selection: age/weight queues and the layered selector driven by model advice."""
import heapq
from typing import Any, Optional, Protocol

from pydantic import BaseModel, ConfigDict, field_validator

from src.logic.terms import Clause
from src.prover.sine import DEFAULT_TOLERANCE

SOURCE_A = "A"
SOURCE_B = "B"
SOURCE_FALLBACK = "fallback"


def parse_ratio(text: str) -> tuple[int, int]:
    """Parse 'a:b' into a pair of non-negative integers."""
    try:
        left, right = text.split(":")
        return int(left), int(right)
    except ValueError:
        raise ValueError(f"ratio must look like 'a:b', got {text!r}")


class GuidanceContext(Protocol):
    """Per-proof-attempt model state.

    Every numbered clause is recorded when it enters the derivation; only
    clauses that survive forward simplification are classified.
    """
    evaluations: int
    eval_time: float

    def record(self, clause: Clause, sine_level: int = 0) -> None: ...

    def classify(self, clause: Clause) -> bool: ...


class Guidance(Protocol):
    def context(self, generic_fallback: bool = False) -> GuidanceContext: ...


class SelectorConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    age_weight_ratio: tuple[int, int] = (1, 1)
    second_level_ratio: tuple[int, int] = (2, 1)
    guidance: Optional[Any] = None
    generic_fallback: bool = False
    sine_tolerance: float = DEFAULT_TOLERANCE

    @field_validator("age_weight_ratio", "second_level_ratio", mode="before")
    @classmethod
    def _parse_ratio(cls, value):
        if isinstance(value, str):
            return parse_ratio(value)
        return value

    @field_validator("age_weight_ratio", "second_level_ratio")
    @classmethod
    def _check_ratio(cls, value: tuple[int, int]) -> tuple[int, int]:
        if min(value) < 0 or max(value) <= 0:
            raise ValueError(f"ratio needs non-negative parts with one positive, got {value}")
        return value

    @field_validator("sine_tolerance")
    @classmethod
    def _check_tolerance(cls, value: float) -> float:
        if value < 1:
            raise ValueError("sine_tolerance must be >= 1")
        return value


class ClauseQueue:
    """Age and weight priority queues over one view, alternating by ratio.

    Ties break on the lowest clause id. Removal is lazy: a popped id that is
    no longer a member is skipped.
    """

    def __init__(self, ratio: tuple[int, int] = (1, 1)):
        self.ratio = ratio
        self.members: set[int] = set()
        self._by_age: list[tuple[int, Clause]] = []
        self._by_weight: list[tuple[int, int, Clause]] = []
        self._counter = 0

    def __len__(self) -> int:
        return len(self.members)

    def push(self, clause: Clause) -> None:
        self.members.add(clause.id)
        heapq.heappush(self._by_age, (clause.id, clause))
        heapq.heappush(self._by_weight, (clause.weight, clause.id, clause))

    def discard(self, clause_id: int) -> None:
        self.members.discard(clause_id)

    def _pop_live(self, heap: list) -> Optional[Clause]:
        while heap:
            clause = heapq.heappop(heap)[-1]
            if clause.id in self.members:
                return clause
        return None

    def pop(self) -> Optional[Clause]:
        if not self.members:
            return None
        age, weight = self.ratio
        use_age = (self._counter % (age + weight)) < age
        self._counter += 1
        first, second = (self._by_age, self._by_weight) if use_age else (self._by_weight, self._by_age)
        clause = self._pop_live(first) or self._pop_live(second)
        if clause is not None:
            self.members.discard(clause.id)
        return clause


class LayeredSelector:
    """Two views over the unprocessed clauses: A (classified positive) and B (all).

    With second-level ratio a:b the selector draws a times from A, then b times
    from B; an empty A falls back to B and the cycle still advances. Without
    guidance every pick comes from B.
    """

    def __init__(self, config: SelectorConfig):
        self.guided = config.guidance is not None
        self.ratio = config.second_level_ratio
        self.view_a = ClauseQueue(config.age_weight_ratio)
        self.view_b = ClauseQueue(config.age_weight_ratio)
        self.tick = 0

    def __len__(self) -> int:
        return len(self.view_b)

    def add(self, clause: Clause, positive: bool = False) -> None:
        self.view_b.push(clause)
        if self.guided and positive:
            self.view_a.push(clause)

    def select(self) -> tuple[Clause, str]:
        """Pop the next given clause and report which view it came from."""
        if not self.view_b:
            raise IndexError("no unprocessed clauses")
        a, b = self.ratio
        wants_a = self.guided and (self.tick % (a + b)) < a
        self.tick += 1
        if wants_a:
            clause = self.view_a.pop()
            if clause is not None:
                self.view_b.discard(clause.id)
                return clause, SOURCE_A
            source = SOURCE_FALLBACK
        else:
            source = SOURCE_B
        clause = self.view_b.pop()
        self.view_a.discard(clause.id)
        return clause, source
