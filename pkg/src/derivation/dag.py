"""Derivation DAGs recorded by the prover, proof extraction and training labels."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from src.errors import DerivationError
from src.prover.rules import RuleId

# Axiom tags as recorded in a derivation. Any other string is an axiom name.
GOAL = "$goal"
UNKNOWN = "$unknown"


@dataclass(frozen=True, slots=True)
class Initial:
    axiom: str
    sine_level: int


@dataclass(frozen=True, slots=True)
class Derived:
    rule: RuleId
    premises: tuple[int, ...]


NodeLabel = Union[Initial, Derived]


@dataclass(frozen=True, slots=True)
class TrainExample:
    node: int
    target: float
    weight: float


@dataclass
class DerivationDag:
    """Nodes in insertion order, which is topological: premises precede consumers."""
    problem_name: str = "problem"
    nodes: dict[int, NodeLabel] = field(default_factory=dict)
    selected: set[int] = field(default_factory=set)
    proof: Optional[set[int]] = None
    empty_clause: Optional[int] = None

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    @property
    def size(self) -> int:
        return len(self.nodes)

    def add_initial(self, node_id: int, axiom: str, sine_level: int) -> None:
        self._check_fresh(node_id)
        self.nodes[node_id] = Initial(axiom, sine_level)

    def add_derived(self, node_id: int, rule: RuleId, premises: Iterable[int]) -> None:
        self._check_fresh(node_id)
        premises = tuple(premises)
        if len(premises) != rule.arity:
            raise DerivationError(f"{rule.value} needs {rule.arity} premises, got {len(premises)}")
        missing = [p for p in premises if p not in self.nodes]
        if missing:
            raise DerivationError(f"node {node_id} refers to unknown premises {missing}")
        self.nodes[node_id] = Derived(rule, premises)

    def _check_fresh(self, node_id: int) -> None:
        if node_id in self.nodes:
            raise DerivationError(f"node {node_id} recorded twice")

    def mark_selected(self, node_id: int) -> None:
        if node_id not in self.nodes:
            raise DerivationError(f"cannot select unknown node {node_id}")
        self.selected.add(node_id)

    def set_proof(self, empty_clause: int) -> set[int]:
        self.proof = extract_proof(self, empty_clause)
        self.empty_clause = empty_clause
        return self.proof

    def topological_order(self) -> list[int]:
        """Node ids with every premise before its consumers.

        Raises:
            DerivationError: if a premise is missing or the graph has a cycle
        """
        order: list[int] = []
        state: dict[int, int] = {}  # 1 = on stack, 2 = done
        for root in self.nodes:
            if root in state:
                continue
            stack = [(root, False)]
            while stack:
                node, expanded = stack.pop()
                if expanded:
                    state[node] = 2
                    order.append(node)
                    continue
                if state.get(node) == 2:
                    continue
                if state.get(node) == 1:
                    raise DerivationError(f"cycle through node {node}")
                state[node] = 1
                stack.append((node, True))
                label = self.nodes.get(node)
                if label is None:
                    raise DerivationError(f"unknown node {node}")
                if isinstance(label, Derived):
                    for p in reversed(label.premises):
                        if state.get(p) == 1:
                            raise DerivationError(f"cycle through node {p}")
                        if state.get(p) != 2:
                            stack.append((p, False))
        return order

    def axiom_names(self) -> set[str]:
        return {
            label.axiom for label in self.nodes.values()
            if isinstance(label, Initial) and label.axiom not in (GOAL, UNKNOWN)
        }


def extract_proof(dag: DerivationDag, empty_clause: int) -> set[int]:
    """Ancestor closure of the empty clause, inclusive."""
    if empty_clause not in dag.nodes:
        raise DerivationError(f"empty clause {empty_clause} is not in the derivation")
    proof: set[int] = set()
    stack = [empty_clause]
    while stack:
        node = stack.pop()
        if node in proof:
            continue
        proof.add(node)
        label = dag.nodes[node]
        if isinstance(label, Derived):
            stack.extend(label.premises)
    return proof


def label_dag(dag: DerivationDag) -> list[TrainExample]:
    """Training examples of a solved derivation.

    Selected proof clauses get target 1.0, other selected clauses 0.0. With P
    positives and N negatives each positive weighs 1/(2P) and each negative
    1/(2N), so the DAG totals 1 and both classes contribute evenly; a missing
    class hands its half to the other one.
    """
    if dag.proof is None:
        raise DerivationError(f"derivation of {dag.problem_name} has no proof")
    positives = sorted(dag.selected & dag.proof)
    negatives = sorted(dag.selected - dag.proof)
    if not positives:
        raise DerivationError(f"derivation of {dag.problem_name} has no selected proof clause")
    if negatives:
        pos_w, neg_w = 1.0 / (2 * len(positives)), 1.0 / (2 * len(negatives))
    else:
        pos_w, neg_w = 1.0 / len(positives), 0.0
    examples = [TrainExample(n, 1.0, pos_w) for n in positives]
    examples += [TrainExample(n, 0.0, neg_w) for n in negatives]
    return examples


def merge_dags(guided: DerivationDag, failed: DerivationDag) -> DerivationDag:
    """Combine a guided proof with a failed run on the same problem.

    Failed-run nodes that repeat a node already present (same axiom and level,
    or same rule over the same merged premises) are folded into it; the rest
    are appended under fresh ids. The failed run's selected clauses join the
    selected set, so they become extra negatives unless they fold into a node
    of the guided proof, which stays positive: the proof comes from the guided
    run alone.
    """
    if guided.proof is None:
        raise DerivationError(f"guided derivation of {guided.problem_name} has no proof")
    merged = DerivationDag(guided.problem_name)
    merged.nodes = dict(guided.nodes)
    owner: dict[NodeLabel, int] = {}
    canon: dict[int, int] = {}
    for node_id in guided.topological_order():
        canon[node_id] = owner.setdefault(_relabel(guided.nodes[node_id], canon), node_id)
    next_id = max(guided.nodes, default=-1) + 1
    mapped: dict[int, int] = {}
    for node_id in failed.topological_order():
        label = _relabel(failed.nodes[node_id], mapped)
        found = owner.get(label)
        if found is None:
            found = owner[label] = next_id
            merged.nodes[found] = label
            next_id += 1
        mapped[node_id] = found
    merged.selected = set(guided.selected) | {mapped[n] for n in failed.selected}
    merged.proof = set(guided.proof)
    merged.empty_clause = guided.empty_clause
    return merged


def _relabel(label: NodeLabel, ids: dict[int, int]) -> NodeLabel:
    if isinstance(label, Derived):
        return Derived(label.rule, tuple(ids[p] for p in label.premises))
    return label
