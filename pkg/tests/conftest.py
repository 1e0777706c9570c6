"""Pytest fixtures and configuration."""
import numpy as np
import pytest

from src.derivation import GOAL, DerivationDag
from src.harness import crafted_corpus
from src.logic import parse_problem
from src.model import Model, ModelConfig
from src.prover.rules import RuleId
from src.prover.sine import UNREACHED

AXIOM_NAMES = ["ax0", "ax1", "ax2", "ax3", "ax4", "ax5", "ax6"]

SYLLOGISM = """
cnf(mortal, axiom, (~man(X) | mortal(X))).
cnf(socrates, axiom, man(socrates)).
cnf(goal, negated_conjecture, ~mortal(socrates)).
"""

TRANSITIVITY = """
cnf(r_ab, axiom, r(a, b)).
cnf(r_bc, axiom, r(b, c)).
cnf(trans, axiom, (~r(X, Y) | ~r(Y, Z) | r(X, Z))).
cnf(goal, negated_conjecture, ~r(a, c)).
"""


@pytest.fixture
def syllogism():
    return parse_problem(SYLLOGISM, "syllogism")


@pytest.fixture
def transitivity():
    return parse_problem(TRANSITIVITY, "transitivity")


@pytest.fixture(scope="session")
def crafted():
    """The 30-problem function-free corpus as (problem, satisfiable) pairs."""
    return crafted_corpus()


def build_random_dag(rng: np.random.Generator, name: str = "random", max_nodes: int = 30) -> DerivationDag:
    """A labeled derivation over a small axiom vocabulary so that merging collapses nodes."""
    dag = DerivationDag(name)
    n_initial = int(rng.integers(2, 6))
    dag.add_initial(0, GOAL, 0)
    for i in range(1, n_initial):
        axiom = AXIOM_NAMES[int(rng.integers(0, len(AXIOM_NAMES)))]
        level = int(rng.integers(-1, 5))
        dag.add_initial(i, axiom, UNREACHED if level < 0 else level)
    rules = list(RuleId)
    total = int(rng.integers(n_initial + 2, max_nodes + 1))
    for node_id in range(n_initial, total):
        rule = rules[int(rng.integers(0, len(rules)))]
        premises = [int(p) for p in rng.integers(0, node_id, size=rule.arity)]
        dag.add_derived(node_id, rule, premises)
    last = total - 1
    proof = dag.set_proof(last)
    for node_id in range(total - 1):
        if rng.random() < 0.5:
            dag.mark_selected(node_id)
    dag.mark_selected(min(proof))
    return dag


@pytest.fixture
def make_dag():
    """Factory: make_dag(seed, name) -> a random labeled derivation."""
    def factory(seed: int, name: str = "random", max_nodes: int = 30) -> DerivationDag:
        return build_random_dag(np.random.default_rng(seed), name, max_nodes)
    return factory


@pytest.fixture
def small_config():
    return ModelConfig(n=8, revealed_axioms=AXIOM_NAMES[:5])


@pytest.fixture
def small_model(small_config):
    return Model.initialize(small_config, seed=0)


class StubContext:
    """Guidance session that classifies by a fixed predicate on the clause."""

    def __init__(self, predicate):
        self.predicate = predicate
        self.evaluations = 0
        self.eval_time = 0.0

    def record(self, clause, sine_level=0):
        pass

    def classify(self, clause):
        self.evaluations += 1
        return self.predicate(clause)


class StubGuidance:
    def __init__(self, predicate=lambda clause: True):
        self.predicate = predicate

    def context(self, generic_fallback=False):
        return StubContext(self.predicate)


@pytest.fixture
def stub_guidance():
    return StubGuidance
