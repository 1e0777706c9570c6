"""Tests for inference rules, clause selection and the given-clause loop."""
import pytest

from src.derivation import Derived
from src.errors import DerivationError
from src.harness import ground_oracle
from src.logic import parse_problem
from src.prover.rules import (
    RuleId,
    all_factors,
    all_resolvents,
    subsumes,
    subsumption_resolve,
)
from src.prover.saturation import Limits, Outcome, replay, saturate
from src.prover.selection import (
    SOURCE_A,
    SOURCE_B,
    SOURCE_FALLBACK,
    ClauseQueue,
    LayeredSelector,
    SelectorConfig,
    parse_ratio,
)


def clauses(text):
    return parse_problem(text).clauses


# ---------- rules ----------

def test_binary_resolution():
    c1, c2 = clauses("cnf(c1, axiom, (p(X) | q(X))).\ncnf(c2, axiom, ~p(a)).\n")
    (resolvent,) = list(all_resolvents(c1, c2))
    assert str(resolvent) == "q(a)"
    assert resolvent.origin.rule == RuleId.RESOLUTION
    assert resolvent.origin.premises == (0, 1)


def test_factoring_merges_unifiable_literals():
    (c,) = clauses("cnf(c, axiom, (p(X) | p(Y))).\n")
    (factor,) = list(all_factors(c))
    assert str(factor) == "p(X0)"
    assert factor.origin.rule == RuleId.FACTORING
    assert factor.origin.premises == (0,)


def test_subsumption_uses_set_semantics():
    general, specific, two = clauses(
        "cnf(g, axiom, p(X)).\ncnf(s, axiom, (p(a) | q(b))).\ncnf(t, axiom, (p(X) | p(Y))).\n"
    )
    (unit,) = clauses("cnf(u, axiom, p(a)).\n")
    assert subsumes(general, specific)
    assert not subsumes(specific, general)
    assert subsumes(two, unit)


def test_subsumption_resolution_drops_the_complement():
    c, side = clauses("cnf(c, axiom, (p(a) | q(a))).\ncnf(side, axiom, ~p(X)).\n")
    reduced = subsumption_resolve(c, side)
    assert str(reduced) == "q(a)"
    assert reduced.origin.rule == RuleId.SUBSUMPTION_RESOLUTION
    assert reduced.origin.premises == (0, 1)


def test_subsumption_resolution_needs_the_rest_to_match():
    c, side = clauses("cnf(c, axiom, (p(a) | q(a))).\ncnf(side, axiom, (~p(X) | r(X))).\n")
    assert subsumption_resolve(c, side) is None


# ---------- selection ----------

def test_parse_ratio():
    assert parse_ratio("2:1") == (2, 1)
    with pytest.raises(ValueError):
        parse_ratio("2-1")


def test_selector_config_rejects_zero_ratio():
    with pytest.raises(ValueError):
        SelectorConfig(second_level_ratio="0:0")


def test_clause_queue_alternates_age_and_weight():
    heavy, light, middle = clauses(
        "cnf(h, axiom, (p(a) | q(a) | r(a))).\ncnf(l, axiom, p(b)).\ncnf(m, axiom, (p(c) | q(c))).\n"
    )
    queue = ClauseQueue((1, 1))
    for c in (heavy, light, middle):
        queue.push(c)
    assert [queue.pop().id for _ in range(3)] == [0, 1, 2]
    assert queue.pop() is None


def test_unguided_selector_draws_from_b_only():
    selector = LayeredSelector(SelectorConfig())
    for c in clauses("cnf(x, axiom, p(a)).\ncnf(y, axiom, p(b)).\n"):
        selector.add(c, positive=True)
    assert [selector.select()[1] for _ in range(2)] == [SOURCE_B, SOURCE_B]
    assert len(selector) == 0


def test_guided_selector_falls_back_when_a_is_empty(stub_guidance):
    selector = LayeredSelector(SelectorConfig(guidance=stub_guidance()))
    for c in clauses("cnf(x, axiom, p(a)).\ncnf(y, axiom, p(b)).\n"):
        selector.add(c, positive=False)
    assert selector.select()[1] == SOURCE_FALLBACK


def test_trace_follows_two_to_one(transitivity, stub_guidance):
    config = SelectorConfig(second_level_ratio="2:1", guidance=stub_guidance())
    result = saturate(transitivity, config, Limits(max_selections=50))
    assert [e.source for e in result.trace[:3]] == [SOURCE_A, SOURCE_A, SOURCE_B]
    assert [e.tick for e in result.trace[:3]] == [1, 2, 3]


def test_trace_pattern_holds_at_every_prefix(crafted, stub_guidance):
    guidance = stub_guidance(lambda clause: clause.weight <= 4)
    config = SelectorConfig(second_level_ratio=(2, 1), guidance=guidance)
    for problem, _ in crafted[:12]:
        result = saturate(problem, config, Limits(max_selections=200))
        for entry in result.trace:
            if (entry.tick - 1) % 3 < 2:
                assert entry.source in (SOURCE_A, SOURCE_FALLBACK)
            else:
                assert entry.source == SOURCE_B


def test_ratio_holds_over_a_long_trace(stub_guidance):
    facts = "".join(f"cnf(f{i}, axiom, p(c{i})).\n" for i in range(600))
    problem = parse_problem(facts + "cnf(goal, negated_conjecture, ~q(c0)).\n", "many_facts")
    config = SelectorConfig(second_level_ratio=(2, 1), guidance=stub_guidance(lambda clause: clause.id % 2 == 0))
    result = saturate(problem, config, Limits(max_selections=500))
    assert result.outcome == Outcome.LIMIT_REACHED
    assert len(result.trace) == 500
    sources = [e.source for e in result.trace]
    assert SOURCE_A in sources and SOURCE_FALLBACK in sources
    from_a = from_b = 0
    for source in sources:
        if source == SOURCE_B:
            from_b += 1
        else:
            from_a += 1
        assert abs(from_a - 2 * from_b) <= 2


# ---------- saturation ----------

def test_syllogism_is_proved_and_replays(syllogism):
    result = saturate(syllogism)
    assert result.outcome == Outcome.PROOF
    assert result.solved
    dag = result.dag
    assert result.empty_clause_id in dag.proof
    assert dag.selected <= set(dag.nodes)
    assert {e.clause_id for e in result.trace} == dag.selected
    assert replay(result)


def test_proof_nodes_record_rule_and_premises(syllogism):
    result = saturate(syllogism)
    for node_id in result.dag.proof:
        label = result.dag.nodes[node_id]
        if isinstance(label, Derived):
            assert result.clauses[node_id].origin.premises == label.premises


def test_satisfiable_problem_saturates():
    problem = parse_problem("cnf(p_a, axiom, p(a)).\ncnf(goal, negated_conjecture, ~q(a)).\n")
    result = saturate(problem)
    assert result.outcome == Outcome.SATURATED
    assert result.dag.proof is None
    with pytest.raises(DerivationError):
        replay(result)


def test_selection_limit(transitivity):
    result = saturate(transitivity, limits=Limits(max_selections=0))
    assert result.outcome == Outcome.LIMIT_REACHED
    assert result.stats.selections == 0


def test_empty_input_clause_is_an_immediate_proof():
    problem = parse_problem("cnf(bottom, axiom, $false).\ncnf(p_a, axiom, p(a)).\n")
    result = saturate(problem)
    assert result.outcome == Outcome.PROOF
    assert result.stats.selections == 0


def test_two_literal_refutation_is_proved():
    problem = parse_problem(
        "cnf(either, axiom, (p(X) | p(Y))).\ncnf(goal, negated_conjecture, (~p(X) | ~p(Y))).\n"
    )
    result = saturate(problem)
    assert result.solved
    assert replay(result)


def test_stats_are_consistent(transitivity, stub_guidance):
    result = saturate(transitivity, SelectorConfig(guidance=stub_guidance()))
    stats = result.stats
    assert stats.retained <= stats.generated
    assert stats.model_eval_time <= stats.wall_time
    assert stats.model_evaluations > 0


def test_crafted_corpus_soundness_and_completeness(crafted):
    for problem, satisfiable in crafted:
        result = saturate(problem, limits=Limits(max_selections=10_000))
        if satisfiable:
            assert result.outcome != Outcome.PROOF, problem.name
        else:
            assert result.outcome == Outcome.PROOF, problem.name
            assert replay(result)


def test_deep_transitivity_chain(stub_guidance):
    facts = "".join(f"cnf(r{i}, axiom, r(c{i}, c{i + 1})).\n" for i in range(6))
    problem = parse_problem(
        facts
        + "cnf(trans, axiom, (~r(X, Y) | ~r(Y, Z) | r(X, Z))).\n"
        + "cnf(goal, negated_conjecture, ~r(c0, c6)).\n",
        "chain6",
    )
    assert ground_oracle(problem)
    for config in (SelectorConfig(), SelectorConfig(guidance=stub_guidance())):
        result = saturate(problem, config, Limits(max_selections=10_000))
        assert result.outcome == Outcome.PROOF
        assert replay(result)
        dag = result.dag
        initial = {n for n in dag.proof if not isinstance(dag.nodes[n], Derived)}
        # every link of the chain and the goal are needed
        assert {0, 1, 2, 3, 4, 5, 7} <= initial
        derived = [n for n in dag.proof if isinstance(dag.nodes[n], Derived)]
        assert len(derived) >= 6
