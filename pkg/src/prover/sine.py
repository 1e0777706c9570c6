"""SInE levels: a symbol-trigger distance of every input clause from the conjecture."""
from collections import Counter
from dataclasses import dataclass, field

from src.logic.terms import Clause, Problem, Symbol, clause_symbols

# Level of axioms never triggered from the conjecture.
UNREACHED = -1

DEFAULT_TOLERANCE = 1.5


def symbol_occurrences(problem: Problem, axioms_only: bool = True) -> Counter[Symbol]:
    """Number of clauses each symbol occurs in (counted once per clause).

    Only axiom clauses are counted by default: conjecture clauses are the
    starting point of the trigger relation, not part of it. Counting them
    too raises the occurrence of every goal symbol, e.g. p in
    ``~p(a)`` / ``p(X) | ~q(X)`` goes from 1 to 2 and stops triggering
    the axiom at tolerance 1.
    """
    counts: Counter[Symbol] = Counter()
    clauses = problem.axioms if axioms_only else problem.clauses
    for clause in clauses:
        counts.update(clause_symbols(clause))
    return counts


def triggers(clause: Clause, occurrences: Counter[Symbol], tolerance: float) -> set[Symbol]:
    """Symbols s of `clause` with occ(s) <= tolerance * min occ over the clause's symbols."""
    symbols = clause_symbols(clause)
    if not symbols:
        return set()
    least = min(occurrences[s] for s in symbols)
    return {s for s in symbols if occurrences[s] <= tolerance * least}


@dataclass(frozen=True)
class SineLevels:
    tolerance: float
    level: dict[int, int] = field(default_factory=dict)

    def __getitem__(self, clause_id: int) -> int:
        return self.level.get(clause_id, UNREACHED)

    def max_level(self) -> int:
        return max((lvl for lvl in self.level.values() if lvl != UNREACHED), default=0)

    def dump(self) -> str:
        lines = [f"# tolerance {self.tolerance}"]
        lines += [f"{cid} {lvl}" for cid, lvl in sorted(self.level.items())]
        return "\n".join(lines) + "\n"


def sine_levels(problem: Problem, tolerance: float = DEFAULT_TOLERANCE) -> SineLevels:
    """Assign level 0 to conjecture clauses and level k+1 to axioms first triggered
    by a symbol occurring in some clause of level <= k."""
    if tolerance < 1:
        raise ValueError(f"SInE tolerance must be >= 1, got {tolerance}")
    occurrences = symbol_occurrences(problem)
    level = {c.id: 0 for c in problem.conjectures}
    reached: set[Symbol] = set()
    for c in problem.conjectures:
        reached |= clause_symbols(c)

    untouched = {c.id: triggers(c, occurrences, tolerance) for c in problem.axioms}
    by_id = {c.id: c for c in problem.axioms}
    k = 0
    while True:
        fresh = [cid for cid, trig in untouched.items() if trig & reached]
        if not fresh:
            break
        k += 1
        for cid in fresh:
            level[cid] = k
            del untouched[cid]
        for cid in fresh:
            reached |= clause_symbols(by_id[cid])

    for cid in untouched:
        level[cid] = UNREACHED
    return SineLevels(tolerance, level)
