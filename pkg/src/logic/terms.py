"""First-order terms, literals and clauses.

All types are immutable. Variables are plain integers scoped per clause;
two clauses that take part in one inference must be renamed apart first
(see `rename_apart`).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Optional, Union

if TYPE_CHECKING:
    from src.prover.rules import RuleId


class SymbolKind(str, Enum):
    FUNCTION = "function"
    PREDICATE = "predicate"


class Role(str, Enum):
    AXIOM = "axiom"
    NEGATED_CONJECTURE = "negated_conjecture"


@dataclass(frozen=True, slots=True)
class Symbol:
    name: str
    arity: int
    kind: SymbolKind

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    index: int

    def __str__(self) -> str:
        return f"X{self.index}"


@dataclass(frozen=True, slots=True)
class App:
    symbol: Symbol
    args: tuple[Term, ...] = ()

    def __post_init__(self):
        if len(self.args) != self.symbol.arity:
            raise ValueError(
                f"{self.symbol.name} expects {self.symbol.arity} arguments, got {len(self.args)}"
            )

    def __str__(self) -> str:
        if not self.args:
            return self.symbol.name
        return f"{self.symbol.name}({','.join(str(a) for a in self.args)})"


Term = Union[Var, App]


@dataclass(frozen=True, slots=True)
class Literal:
    positive: bool
    predicate: Symbol
    args: tuple[Term, ...] = ()

    def __post_init__(self):
        if len(self.args) != self.predicate.arity:
            raise ValueError(
                f"{self.predicate.name} expects {self.predicate.arity} arguments, got {len(self.args)}"
            )

    def negate(self) -> Literal:
        return Literal(not self.positive, self.predicate, self.args)

    def complements(self, other: Literal) -> bool:
        return self.positive != other.positive and self.predicate == other.predicate and self.args == other.args

    def __str__(self) -> str:
        atom = self.predicate.name
        if self.args:
            atom += f"({','.join(str(a) for a in self.args)})"
        return atom if self.positive else f"~{atom}"


@dataclass(frozen=True, slots=True)
class Origin:
    """Where a clause comes from: an input statement or a rule application."""
    role: Optional[Role] = None
    name: Optional[str] = None
    rule: Optional["RuleId"] = None
    premises: tuple[int, ...] = ()

    @property
    def is_input(self) -> bool:
        return self.role is not None

    @classmethod
    def derived(cls, rule: "RuleId", premises: tuple[int, ...]) -> Origin:
        return cls(rule=rule, premises=premises)


# Clauses not yet numbered by a proving state.
UNNUMBERED = -1


@dataclass(frozen=True, slots=True)
class Clause:
    literals: tuple[Literal, ...]
    id: int = UNNUMBERED
    origin: Origin = field(default_factory=Origin)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    @property
    def weight(self) -> int:
        """Symbol count; every variable occurrence counts one."""
        return sum(1 + sum(term_size(a) for a in lit.args) for lit in self.literals)

    def variables(self) -> set[int]:
        found: set[int] = set()
        for lit in self.literals:
            for arg in lit.args:
                _collect_vars(arg, found)
        return found

    def max_var(self) -> int:
        return max(self.variables(), default=-1)

    def with_id(self, clause_id: int) -> Clause:
        return replace(self, id=clause_id)

    def __str__(self) -> str:
        if not self.literals:
            return "$false"
        return " | ".join(str(lit) for lit in self.literals)


def term_size(term: Term) -> int:
    if isinstance(term, Var):
        return 1
    return 1 + sum(term_size(a) for a in term.args)


def _collect_vars(term: Term, found: set[int]) -> None:
    if isinstance(term, Var):
        found.add(term.index)
    else:
        for a in term.args:
            _collect_vars(a, found)


def term_symbols(term: Term, found: set[Symbol]) -> None:
    if isinstance(term, App):
        found.add(term.symbol)
        for a in term.args:
            term_symbols(a, found)


def clause_symbols(clause: Clause) -> set[Symbol]:
    """Predicate and function symbols (constants included) occurring in a clause."""
    found: set[Symbol] = set()
    for lit in clause.literals:
        found.add(lit.predicate)
        for a in lit.args:
            term_symbols(a, found)
    return found


def map_vars(term: Term, mapping: dict[int, int]) -> Term:
    if isinstance(term, Var):
        return Var(mapping[term.index])
    if not term.args:
        return term
    return App(term.symbol, tuple(map_vars(a, mapping) for a in term.args))


def rename_apart(clause: Clause, offset: int) -> Clause:
    """Shift every variable index of `clause` by `offset`."""
    if offset == 0:
        return clause
    mapping = {v: v + offset for v in clause.variables()}
    literals = tuple(
        Literal(lit.positive, lit.predicate, tuple(map_vars(a, mapping) for a in lit.args))
        for lit in clause.literals
    )
    return replace(clause, literals=literals)


def dedupe(literals: tuple[Literal, ...] | list[Literal]) -> tuple[Literal, ...]:
    """Drop repeated literals, keeping first occurrences in order."""
    return tuple(dict.fromkeys(literals))


def normalize_variables(literals: tuple[Literal, ...]) -> tuple[Literal, ...]:
    """Renumber variables 0, 1, ... in order of first occurrence."""
    mapping: dict[int, int] = {}

    def visit(term: Term) -> None:
        if isinstance(term, Var):
            if term.index not in mapping:
                mapping[term.index] = len(mapping)
        else:
            for a in term.args:
                visit(a)

    for lit in literals:
        for a in lit.args:
            visit(a)
    if all(k == v for k, v in mapping.items()):
        return literals
    return tuple(
        Literal(lit.positive, lit.predicate, tuple(map_vars(a, mapping) for a in lit.args))
        for lit in literals
    )


def is_tautology(clause: Clause) -> bool:
    """True if the clause holds a literal together with its syntactic complement."""
    lits = set(clause.literals)
    return any(lit.negate() in lits for lit in clause.literals if lit.positive)


@dataclass(frozen=True)
class Problem:
    """Input clauses in file order; clause ids are 0..len-1."""
    clauses: tuple[Clause, ...]
    name: str = "problem"

    @property
    def axioms(self) -> list[Clause]:
        return [c for c in self.clauses if c.origin.role == Role.AXIOM]

    @property
    def conjectures(self) -> list[Clause]:
        return [c for c in self.clauses if c.origin.role == Role.NEGATED_CONJECTURE]

    def symbols(self) -> set[Symbol]:
        found: set[Symbol] = set()
        for c in self.clauses:
            found |= clause_symbols(c)
        return found

    def constants(self) -> list[Symbol]:
        return sorted(
            (s for s in self.symbols() if s.kind == SymbolKind.FUNCTION and s.arity == 0),
            key=lambda s: s.name,
        )
