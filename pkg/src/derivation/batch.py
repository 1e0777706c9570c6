"""Merging labeled derivations into collapsed training batches.

Nodes that the network cannot tell apart share a collapse key and become one
batch node (hash consing). Derived keys refer to premises through their batch
indices, so equal keys mean equal premise structure all the way down.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Mapping, Optional, Sequence, Union

import numpy as np

from src.prover.rules import RuleId
from src.prover.sine import UNREACHED
from .dag import GOAL, UNKNOWN, Derived, DerivationDag, Initial, NodeLabel, label_dag

DEFAULT_BATCH_NODES = 20000


class TagKind(str, Enum):
    NAMED = "named"
    UNKNOWN = "unknown"
    GOAL = "goal"


@dataclass(frozen=True, slots=True)
class AxiomTag:
    kind: TagKind
    index: int = -1

    @classmethod
    def named(cls, index: int) -> AxiomTag:
        return cls(TagKind.NAMED, index)


UNKNOWN_TAG = AxiomTag(TagKind.UNKNOWN)
GOAL_TAG = AxiomTag(TagKind.GOAL)


def resolve_tag(axiom: str, revealed: Mapping[str, int]) -> AxiomTag:
    """Map a recorded axiom name to the model's tag: revealed index, unknown or goal."""
    if axiom == GOAL:
        return GOAL_TAG
    index = revealed.get(axiom) if axiom != UNKNOWN else None
    return UNKNOWN_TAG if index is None else AxiomTag.named(index)


def effective_level(level: int, sine_cap: Optional[int]) -> Optional[int]:
    """SInE level as the network sees it: capped, UNREACHED at the cap, None when unused."""
    if sine_cap is None:
        return None
    if level == UNREACHED or level >= sine_cap:
        return sine_cap
    return level


@dataclass(frozen=True, slots=True)
class BatchInitial:
    tag: AxiomTag
    level: Optional[int]


@dataclass(frozen=True, slots=True)
class BatchDerived:
    rule: RuleId
    premises: tuple[int, ...]


BatchNode = Union[BatchInitial, BatchDerived]


def collapse_key(
    label: NodeLabel,
    premise_keys: tuple[Hashable, ...] = (),
    revealed: Mapping[str, int] = {},
    sine_cap: Optional[int] = 16,
) -> tuple:
    """Key under which a node collapses with every node of identical network value.

    Initial nodes key on (tag, level); derived nodes on (rule, premise keys in order).
    """
    if isinstance(label, Initial):
        return ("I", resolve_tag(label.axiom, revealed), effective_level(label.sine_level, sine_cap))
    return ("D", label.rule, tuple(premise_keys))


@dataclass
class Batch:
    nodes: list[BatchNode] = field(default_factory=list)
    targets: np.ndarray = field(default_factory=lambda: np.zeros(0))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    is_example: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    member_problem_names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def example_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.is_example)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


class BatchBuilder:
    """Incrementally interns nodes of several derivations into one batch."""

    def __init__(self, revealed_axioms: Sequence[str] = (), sine_cap: Optional[int] = 16):
        self.revealed = {name: i for i, name in enumerate(revealed_axioms)}
        self.sine_cap = sine_cap
        self.index: dict[tuple, int] = {}
        self.nodes: list[BatchNode] = []
        self.weight_sum: list[float] = []
        self.label_sum: list[float] = []
        self.label_plain: list[list[float]] = []
        self.names: list[str] = []

    def intern(self, label: NodeLabel, node_map: dict[int, int]) -> int:
        premise_keys: tuple[int, ...] = ()
        if isinstance(label, Derived):
            premise_keys = tuple(node_map[p] for p in label.premises)
        key = collapse_key(label, premise_keys, self.revealed, self.sine_cap)
        found = self.index.get(key)
        if found is not None:
            return found
        found = self.index[key] = len(self.nodes)
        if isinstance(label, Initial):
            self.nodes.append(BatchInitial(key[1], key[2]))
        else:
            self.nodes.append(BatchDerived(label.rule, premise_keys))
        self.weight_sum.append(0.0)
        self.label_sum.append(0.0)
        self.label_plain.append([])
        return found

    def add(self, dag: DerivationDag) -> dict[int, int]:
        """Intern every node of a solved derivation and fold in its examples.

        Returns the map from the derivation's node ids to batch indices.
        """
        examples = label_dag(dag)
        node_map: dict[int, int] = {}
        for node_id in dag.topological_order():
            node_map[node_id] = self.intern(dag.nodes[node_id], node_map)
        for ex in examples:
            k = node_map[ex.node]
            self.weight_sum[k] += ex.weight
            self.label_sum[k] += ex.target * ex.weight
            self.label_plain[k].append(ex.target)
        self.names.append(dag.problem_name)
        return node_map

    def build(self) -> Batch:
        weights = np.array(self.weight_sum, dtype=np.float64)
        is_example = np.array([bool(p) for p in self.label_plain], dtype=bool)
        targets = np.zeros(len(self.nodes))
        for k, plain in enumerate(self.label_plain):
            if not plain:
                continue
            if weights[k] > 0:
                targets[k] = self.label_sum[k] / weights[k]
            else:
                targets[k] = sum(plain) / len(plain)
        return Batch(list(self.nodes), targets, weights, is_example, list(self.names))


def merge_batch(
    dags: Sequence[DerivationDag],
    revealed_axioms: Sequence[str] = (),
    sine_cap: Optional[int] = 16,
) -> Batch:
    """Union of labeled derivations with indistinguishable nodes collapsed.

    Collapsing examples (l1, w1) and (l2, w2) yields weight w1 + w2 and target
    (l1*w1 + l2*w2) / (w1 + w2), which keeps the batch loss equal to the sum of
    the members' losses.
    """
    builder = BatchBuilder(revealed_axioms, sine_cap)
    for dag in dags:
        builder.add(dag)
    return builder.build()


def pack(sizes: Sequence[int], target_nodes: int = DEFAULT_BATCH_NODES) -> list[list[int]]:
    """Greedy first-fit over sizes in descending order.

    A bin accepts an item only while its total stays strictly below
    target_nodes; an item at or above the target ends up alone.
    """
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], i))
    bins: list[list[int]] = []
    totals: list[int] = []
    for i in order:
        for b, total in enumerate(totals):
            if total + sizes[i] < target_nodes:
                bins[b].append(i)
                totals[b] += sizes[i]
                break
        else:
            bins.append([i])
            totals.append(sizes[i])
    return bins


def build_batches(
    dags: Sequence[DerivationDag],
    target_nodes: int = DEFAULT_BATCH_NODES,
    revealed_axioms: Sequence[str] = (),
    sine_cap: Optional[int] = 16,
) -> list[Batch]:
    """Pack solved derivations into merged batches of roughly target_nodes nodes."""
    bins = pack([len(d) for d in dags], target_nodes)
    return [merge_batch([dags[i] for i in b], revealed_axioms, sine_cap) for b in bins]
