"""Robinson unification with occurs check, one-way matching, substitution."""
from dataclasses import replace
from typing import Optional, Union

from .terms import App, Clause, Literal, Term, Var, dedupe

Substitution = dict[int, Term]


def walk(term: Term, subst: Substitution) -> Term:
    while isinstance(term, Var) and term.index in subst:
        term = subst[term.index]
    return term


def occurs(index: int, term: Term, subst: Substitution) -> bool:
    term = walk(term, subst)
    if isinstance(term, Var):
        return term.index == index
    return any(occurs(index, a, subst) for a in term.args)


def _unify_terms(a: Term, b: Term, subst: Substitution) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x, subst), walk(y, subst)
        if x == y:
            continue
        if isinstance(x, Var):
            if occurs(x.index, y, subst):
                return False
            subst[x.index] = y
        elif isinstance(y, Var):
            if occurs(y.index, x, subst):
                return False
            subst[y.index] = x
        else:
            if x.symbol != y.symbol:
                return False
            stack.extend(zip(x.args, y.args))
    return True


def resolve_term(term: Term, subst: Substitution) -> Term:
    term = walk(term, subst)
    if isinstance(term, Var) or not term.args:
        return term
    return App(term.symbol, tuple(resolve_term(a, subst) for a in term.args))


def unify(a: Union[Term, Literal], b: Union[Term, Literal]) -> Optional[Substitution]:
    """Most general unifier of two terms or two literal atoms, or None.

    Polarity of literals is ignored; only the atoms are unified. The returned
    substitution is idempotent.
    """
    subst: Substitution = {}
    if isinstance(a, Literal) or isinstance(b, Literal):
        if not (isinstance(a, Literal) and isinstance(b, Literal)) or a.predicate != b.predicate:
            return None
        pairs = zip(a.args, b.args)
        ok = all(_unify_terms(x, y, subst) for x, y in pairs)
    else:
        ok = _unify_terms(a, b, subst)
    if not ok:
        return None
    return {v: resolve_term(t, subst) for v, t in subst.items()}


def _match_term(pattern: Term, target: Term, subst: Substitution) -> bool:
    # target variables are rigid; bindings are never walked
    if isinstance(pattern, Var):
        bound = subst.get(pattern.index)
        if bound is None:
            subst[pattern.index] = target
            return True
        return bound == target
    if not isinstance(target, App) or pattern.symbol != target.symbol:
        return False
    return all(_match_term(p, t, subst) for p, t in zip(pattern.args, target.args))


def match_literal(pattern: Literal, target: Literal, subst: Substitution) -> Optional[Substitution]:
    """Extend `subst` so that pattern·subst == target, or return None."""
    if pattern.positive != target.positive or pattern.predicate != target.predicate:
        return None
    extended = dict(subst)
    if all(_match_term(p, t, extended) for p, t in zip(pattern.args, target.args)):
        return extended
    return None


def apply_term(term: Term, subst: Substitution) -> Term:
    if isinstance(term, Var):
        return subst.get(term.index, term)
    if not term.args:
        return term
    return App(term.symbol, tuple(apply_term(a, subst) for a in term.args))


def apply_literal(lit: Literal, subst: Substitution) -> Literal:
    if not subst:
        return lit
    return Literal(lit.positive, lit.predicate, tuple(apply_term(a, subst) for a in lit.args))


def apply_substitution(clause: Clause, subst: Substitution) -> Clause:
    """Simultaneous replacement; repeated literals collapse to one occurrence."""
    if not subst:
        return clause
    return replace(clause, literals=dedupe([apply_literal(lit, subst) for lit in clause.literals]))
