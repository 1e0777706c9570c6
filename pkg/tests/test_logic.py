"""Tests for terms, the CNF parser and unification."""
import itertools

import numpy as np
import pytest

from src.errors import ParseError, ProblemError
from src.logic import (
    App,
    Clause,
    Literal,
    Role,
    Symbol,
    SymbolKind,
    Var,
    apply_substitution,
    format_problem,
    is_tautology,
    parse_problem,
    rename_apart,
    unify,
)
from src.logic.unify import apply_term

f = Symbol("f", 2, SymbolKind.FUNCTION)
g = Symbol("g", 1, SymbolKind.FUNCTION)
a = App(Symbol("a", 0, SymbolKind.FUNCTION))
b = App(Symbol("b", 0, SymbolKind.FUNCTION))
p = Symbol("p", 1, SymbolKind.PREDICATE)


def test_parse_roles_names_and_variables():
    problem = parse_problem(
        "% comment\n"
        "cnf(ax, axiom, (p(X) | ~q(X, Y))).\n"
        "cnf(goal, negated_conjecture, ~p(a)).\n",
        "demo",
    )
    assert problem.name == "demo"
    assert [c.id for c in problem.clauses] == [0, 1]
    ax, goal = problem.clauses
    assert ax.origin.role == Role.AXIOM and ax.origin.name == "ax"
    assert goal.origin.role == Role.NEGATED_CONJECTURE
    assert ax.variables() == {0, 1}
    assert str(ax) == "p(X0) | ~q(X0,X1)"
    assert [c.origin.name for c in problem.conjectures] == ["goal"]


def test_parse_empty_clause():
    problem = parse_problem("cnf(bottom, axiom, $false).\n")
    assert problem.clauses[0].is_empty


def test_parse_error_carries_line_and_column():
    with pytest.raises(ParseError) as info:
        parse_problem("cnf(a, axiom, p(X)).\ncnf(b, axiom, p(X) & q).\n")
    assert info.value.line == 2
    assert info.value.column == 20


def test_unsupported_role_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_problem("cnf(a, hypothesis, p(a)).\n")


def test_duplicate_axiom_name():
    with pytest.raises(ProblemError, match="duplicate axiom name"):
        parse_problem("cnf(a, axiom, p(a)).\ncnf(a, axiom, p(b)).\n")


def test_arity_conflict():
    with pytest.raises(ProblemError):
        parse_problem("cnf(a, axiom, p(a)).\ncnf(b, axiom, p(a, b)).\n")


def test_empty_file_is_rejected():
    with pytest.raises(ProblemError):
        parse_problem("% nothing here\n")


def test_printed_problem_parses_back(transitivity):
    again = parse_problem(format_problem(transitivity, header="copy"), transitivity.name)
    assert [c.literals for c in again.clauses] == [c.literals for c in transitivity.clauses]
    assert [c.origin for c in again.clauses] == [c.origin for c in transitivity.clauses]


def test_unify_binds_both_sides():
    sigma = unify(App(f, (Var(0), App(g, (Var(1),)))), App(f, (a, App(g, (b,)))))
    assert sigma == {0: a, 1: b}


def test_unify_occurs_check():
    assert unify(Var(0), App(g, (Var(0),))) is None


def test_unify_clash():
    assert unify(App(g, (a,)), App(g, (b,))) is None


def test_unify_is_idempotent():
    sigma = unify(App(f, (Var(0), Var(1))), App(f, (Var(1), a)))
    assert sigma[0] == a and sigma[1] == a


def test_apply_substitution_collapses_repeats():
    clause = Clause((Literal(True, p, (Var(0),)), Literal(True, p, (Var(1),))))
    assert len(apply_substitution(clause, {0: a, 1: a})) == 1


def test_tautology():
    lit = Literal(True, p, (a,))
    assert is_tautology(Clause((lit, lit.negate())))
    assert not is_tautology(Clause((lit, Literal(False, p, (b,)))))


def test_rename_apart_shifts_variables():
    clause = Clause((Literal(True, p, (Var(0),)), Literal(False, p, (Var(2),))))
    assert rename_apart(clause, 5).variables() == {5, 7}
    assert rename_apart(clause, 0) is clause


def test_weight_counts_symbols():
    clause = Clause((Literal(True, p, (App(g, (Var(0),)),)),))
    assert clause.weight == 3


# ---------- unifier properties over random terms ----------

GROUND = [a, b, App(g, (a,)), App(g, (b,)), App(f, (a, b))]


def _random_term(rng, depth=3):
    roll = int(rng.integers(0, 4 if depth > 0 else 2))
    if roll == 0:
        return Var(int(rng.integers(0, 3)))
    if roll == 1:
        return a if rng.random() < 0.5 else b
    if roll == 2:
        return App(g, (_random_term(rng, depth - 1),))
    return App(f, (_random_term(rng, depth - 1), _random_term(rng, depth - 1)))


def _ground_substitutions():
    return [dict(zip(range(3), choice)) for choice in itertools.product(GROUND, repeat=3)]


def test_unifier_is_most_general_on_random_pairs():
    rng = np.random.default_rng(17)
    thetas = _ground_substitutions()
    unified = 0
    for trial in range(200):
        s = _random_term(rng)
        if trial % 2:
            # a ground instance of s, so the pair is always unifiable
            t = apply_term(s, thetas[int(rng.integers(0, len(thetas)))])
        else:
            t = _random_term(rng)
        sigma = unify(s, t)
        grounding = [theta for theta in thetas if apply_term(s, theta) == apply_term(t, theta)]
        if sigma is None:
            assert not grounding, (s, t)
            continue
        unified += 1
        assert apply_term(s, sigma) == apply_term(t, sigma)
        for term in sigma.values():
            assert apply_term(term, sigma) == term
        for theta in grounding:
            for x in range(3):
                assert apply_term(apply_term(Var(x), sigma), theta) == theta[x]
        if trial % 2:
            assert grounding
    assert unified >= 100


def test_every_crafted_problem_prints_and_parses_back(crafted):
    for problem, _ in crafted:
        text = format_problem(problem)
        again = parse_problem(text, problem.name)
        assert [c.literals for c in again.clauses] == [c.literals for c in problem.clauses], problem.name
        assert [c.origin for c in again.clauses] == [c.origin for c in problem.clauses], problem.name
        assert format_problem(again) == text
