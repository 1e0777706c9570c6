"""Inference rules: binary resolution, factoring, subsumption and subsumption resolution.

Rules return unnumbered clauses (id == UNNUMBERED) whose origin records the rule
and the ordered premise ids; the proving state numbers the ones it keeps.
Conclusions have their variables renumbered by first occurrence.
"""
from enum import Enum
from typing import Iterator, Optional

from src.logic.terms import Clause, Literal, Origin, dedupe, normalize_variables
from src.logic.unify import Substitution, apply_literal, match_literal, unify


class RuleId(str, Enum):
    RESOLUTION = "resolution"
    FACTORING = "factoring"
    SUBSUMPTION_RESOLUTION = "subsumption_resolution"

    @property
    def arity(self) -> int:
        return 1 if self is RuleId.FACTORING else 2


def _conclusion(literals: list[Literal], rule: RuleId, premises: tuple[int, ...]) -> Clause:
    return Clause(normalize_variables(dedupe(literals)), origin=Origin.derived(rule, premises))


def resolve(c1: Clause, i: int, c2: Clause, j: int) -> Optional[Clause]:
    """Binary resolvent of literal i of c1 with literal j of c2, premises ordered (c1, c2).

    The clauses must be renamed apart by the caller.
    """
    assert not (c1.variables() & c2.variables()), "premises not renamed apart"
    l1, l2 = c1.literals[i], c2.literals[j]
    if l1.positive == l2.positive or l1.predicate != l2.predicate:
        return None
    sigma = unify(l1, l2)
    if sigma is None:
        return None
    rest = [apply_literal(lit, sigma) for k, lit in enumerate(c1.literals) if k != i]
    rest += [apply_literal(lit, sigma) for k, lit in enumerate(c2.literals) if k != j]
    return _conclusion(rest, RuleId.RESOLUTION, (c1.id, c2.id))


def factor(c: Clause, i: int, j: int) -> Optional[Clause]:
    """Unify two same-sign literals of c and merge the duplicates."""
    if i == j:
        return None
    li, lj = c.literals[i], c.literals[j]
    if li.positive != lj.positive or li.predicate != lj.predicate:
        return None
    sigma = unify(li, lj)
    if sigma is None:
        return None
    return _conclusion([apply_literal(lit, sigma) for lit in c.literals], RuleId.FACTORING, (c.id,))


def all_resolvents(c1: Clause, c2: Clause) -> Iterator[Clause]:
    for i, l1 in enumerate(c1.literals):
        for j, l2 in enumerate(c2.literals):
            if l1.positive != l2.positive and l1.predicate == l2.predicate:
                resolvent = resolve(c1, i, c2, j)
                if resolvent is not None:
                    yield resolvent


def all_factors(c: Clause) -> Iterator[Clause]:
    for i in range(len(c.literals)):
        for j in range(i + 1, len(c.literals)):
            factored = factor(c, i, j)
            if factored is not None:
                yield factored


def _match_into(
    pattern: tuple[Literal, ...], target: tuple[Literal, ...], subst: Substitution
) -> Optional[Substitution]:
    if not pattern:
        return subst
    head, rest = pattern[0], pattern[1:]
    for lit in target:
        extended = match_literal(head, lit, subst)
        if extended is not None:
            found = _match_into(rest, target, extended)
            if found is not None:
                return found
    return None


def subsumes(general: Clause, specific: Clause) -> bool:
    """True iff some substitution maps every literal of `general` into `specific`.

    Set semantics: distinct literals of `general` may land on the same literal
    of `specific`, so {p(X), p(Y)} subsumes {p(a)}.
    """
    return _match_into(general.literals, specific.literals, {}) is not None


def subsumption_resolve(c: Clause, side: Clause) -> Optional[Clause]:
    """Forward subsumption resolution of `c` by `side`, premises ordered (c, side).

    If side = D | L and some substitution maps D into c and L onto the complement
    of a literal M of c, the conclusion is c without M.
    """
    for k, lit in enumerate(side.literals):
        rest = side.literals[:k] + side.literals[k + 1:]
        complement = lit.negate()
        for m, target in enumerate(c.literals):
            sigma = match_literal(complement, target, {})
            if sigma is None:
                continue
            remaining = c.literals[:m] + c.literals[m + 1:]
            if _match_into(rest, remaining, sigma) is not None:
                kept = [x for x in c.literals if x != target]
                return _conclusion(kept, RuleId.SUBSUMPTION_RESOLUTION, (c.id, side.id))
    return None
