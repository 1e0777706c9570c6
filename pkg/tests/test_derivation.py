"""Tests for derivation DAGs, labels, logs and batch merging."""
import numpy as np
import pytest

from src.derivation import (
    GOAL,
    UNKNOWN,
    AxiomTag,
    BatchDerived,
    BatchInitial,
    Derived,
    DerivationDag,
    Initial,
    format_log,
    label_dag,
    merge_batch,
    merge_dags,
    pack,
    parse_log,
    read_log,
    resolve_tag,
    write_log,
)
from src.derivation.batch import GOAL_TAG, UNKNOWN_TAG, effective_level
from src.errors import DerivationError
from src.model.network import ModelConfig, node_keys
from src.prover.rules import RuleId
from src.prover.saturation import saturate
from src.prover.sine import UNREACHED


@pytest.fixture
def tiny_dag():
    dag = DerivationDag("tiny")
    dag.add_initial(0, "ax", 1)
    dag.add_initial(1, GOAL, 0)
    dag.add_derived(2, RuleId.RESOLUTION, (0, 1))
    dag.mark_selected(0)
    dag.mark_selected(1)
    dag.set_proof(2)
    return dag


def test_proof_is_the_ancestor_closure(tiny_dag):
    assert tiny_dag.proof == {0, 1, 2}
    assert tiny_dag.empty_clause == 2


def test_labels_without_negatives(tiny_dag):
    examples = label_dag(tiny_dag)
    assert [(e.node, e.target, e.weight) for e in examples] == [(0, 1.0, 1.0 / 2), (1, 1.0, 1.0 / 2)]


def test_labels_balance_the_classes(tiny_dag):
    tiny_dag.add_initial(3, "junk", UNREACHED)
    tiny_dag.mark_selected(3)
    examples = {e.node: e for e in label_dag(tiny_dag)}
    assert examples[0].weight == pytest.approx(0.25)
    assert examples[3].target == 0.0 and examples[3].weight == pytest.approx(0.5)
    assert sum(e.weight for e in examples.values()) == pytest.approx(1.0)


def test_shared_ancestors_enter_the_proof_once():
    dag = DerivationDag("diamond")
    dag.add_initial(0, "ax", 0)
    dag.add_derived(1, RuleId.FACTORING, (0,))
    dag.add_derived(2, RuleId.FACTORING, (0,))
    dag.add_derived(3, RuleId.RESOLUTION, (1, 2))
    assert dag.set_proof(3) == {0, 1, 2, 3}
    assert len(dag.proof) == 4


def test_class_weights_with_uneven_classes():
    dag = DerivationDag("uneven")
    dag.add_initial(0, "ax", 1)
    dag.add_initial(1, GOAL, 0)
    for node_id in (2, 3, 4):
        dag.add_initial(node_id, f"junk_{node_id}", 2)
    dag.add_derived(5, RuleId.RESOLUTION, (0, 1))
    for node_id in range(5):
        dag.mark_selected(node_id)
    dag.set_proof(5)
    weights = {e.node: (e.target, e.weight) for e in label_dag(dag)}
    assert weights[0] == weights[1] == (1.0, pytest.approx(1 / 4))
    assert all(weights[n] == (0.0, pytest.approx(1 / 6)) for n in (2, 3, 4))
    assert sum(w for _, w in weights.values()) == pytest.approx(1.0)


def test_label_requires_a_proof():
    dag = DerivationDag("open")
    dag.add_initial(0, "ax", 0)
    dag.mark_selected(0)
    with pytest.raises(DerivationError):
        label_dag(dag)


def test_malformed_nodes_are_rejected(tiny_dag):
    with pytest.raises(DerivationError):
        tiny_dag.add_derived(5, RuleId.FACTORING, (0, 1))
    with pytest.raises(DerivationError):
        tiny_dag.add_derived(5, RuleId.RESOLUTION, (0, 9))
    with pytest.raises(DerivationError):
        tiny_dag.add_initial(0, "again", 0)
    with pytest.raises(DerivationError):
        tiny_dag.mark_selected(42)


def test_cycle_is_detected():
    dag = DerivationDag("loop")
    dag.nodes = {0: Derived(RuleId.FACTORING, (1,)), 1: Derived(RuleId.FACTORING, (0,))}
    with pytest.raises(DerivationError, match="cycle"):
        dag.topological_order()


def test_topological_order_puts_premises_first(make_dag):
    dag = make_dag(3)
    position = {node: i for i, node in enumerate(dag.topological_order())}
    for node_id, label in dag.nodes.items():
        if isinstance(label, Derived):
            assert all(position[p] < position[node_id] for p in label.premises)


def test_axiom_names_skip_goal_and_unknown():
    dag = DerivationDag()
    dag.add_initial(0, GOAL, 0)
    dag.add_initial(1, UNKNOWN, 2)
    dag.add_initial(2, "link_03", 1)
    assert dag.axiom_names() == {"link_03"}


# ---------- logs ----------

def test_log_survives_write_and_read(tmp_path, syllogism):
    dag = saturate(syllogism).dag
    path = write_log(dag, tmp_path / "logs" / "syllogism.log")
    again = read_log(path)
    assert again.problem_name == "syllogism"
    assert again.nodes == dag.nodes
    assert again.selected == dag.selected
    assert again.proof == dag.proof
    assert again.empty_clause == dag.empty_clause


def test_log_text_is_stable(make_dag):
    for seed in range(10):
        text = format_log(make_dag(seed, f"p{seed}"))
        assert format_log(parse_log(text)) == text


def test_bad_log_line():
    with pytest.raises(DerivationError, match="line 2"):
        parse_log("# x\nd 0 resolution 7 8\n")
    with pytest.raises(DerivationError):
        parse_log("# x\nz 1\n")


# ---------- augmentation ----------

def test_merge_dags_keeps_the_guided_proof(tiny_dag):
    failed = DerivationDag("tiny")
    failed.add_initial(0, "ax", 1)
    failed.add_initial(1, "other", 2)
    failed.add_derived(2, RuleId.RESOLUTION, (0, 1))
    failed.mark_selected(1)
    failed.mark_selected(2)

    merged = merge_dags(tiny_dag, failed)
    # the failed run's "ax" is the guided node 0
    assert len(merged) == 5
    assert merged.proof == {0, 1, 2}
    assert merged.selected == {0, 1, 3, 4}
    assert merged.nodes[3] == Initial("other", 2)
    assert merged.nodes[4] == Derived(RuleId.RESOLUTION, (0, 3))
    targets = {e.node: e.target for e in label_dag(merged)}
    assert targets == {0: 1.0, 1: 1.0, 3: 0.0, 4: 0.0}


def test_merge_dags_folds_repeated_nodes(tiny_dag):
    failed = DerivationDag("tiny")
    failed.add_initial(7, GOAL, 0)
    failed.add_initial(8, "ax", 1)
    failed.add_initial(9, "ax", 3)
    failed.add_derived(10, RuleId.RESOLUTION, (8, 7))
    failed.add_derived(11, RuleId.RESOLUTION, (8, 7))
    failed.add_derived(12, RuleId.RESOLUTION, (9, 7))
    for node_id in (7, 8, 9, 10):
        failed.mark_selected(node_id)

    merged = merge_dags(tiny_dag, failed)
    assert merged.nodes == {
        **tiny_dag.nodes,
        3: Initial("ax", 3),
        4: Derived(RuleId.RESOLUTION, (3, 1)),
    }
    assert merged.selected == {0, 1, 2, 3}
    # a failed-run selection that repeats a proof node stays positive
    targets = {e.node: e.target for e in label_dag(merged)}
    assert targets == {0: 1.0, 1: 1.0, 2: 1.0, 3: 0.0}

    again = merge_dags(tiny_dag, tiny_dag)
    assert again.nodes == tiny_dag.nodes
    assert again.selected == tiny_dag.selected


def test_merge_dags_needs_a_guided_proof(tiny_dag):
    with pytest.raises(DerivationError):
        merge_dags(DerivationDag("open"), tiny_dag)


# ---------- batches ----------

def test_tags_and_levels():
    revealed = {"link_00": 0}
    assert resolve_tag("link_00", revealed) == AxiomTag.named(0)
    assert resolve_tag("junk_01", revealed) == UNKNOWN_TAG
    assert resolve_tag(GOAL, revealed) == GOAL_TAG
    assert effective_level(3, 16) == 3
    assert effective_level(20, 16) == 16
    assert effective_level(UNREACHED, 16) == 16
    assert effective_level(3, None) is None


def test_identical_derivations_collapse(tiny_dag):
    single = merge_batch([tiny_dag], ["ax"])
    double = merge_batch([tiny_dag, tiny_dag], ["ax"])
    assert len(double) == len(single) == 3
    assert double.total_weight == pytest.approx(2 * single.total_weight)
    np.testing.assert_array_equal(double.targets, single.targets)
    assert double.member_problem_names == ["tiny", "tiny"]


def test_batch_nodes_are_topological(make_dag):
    batch = merge_batch([make_dag(s) for s in range(4)], ["ax0", "ax1"])
    for k, node in enumerate(batch.nodes):
        if isinstance(node, BatchDerived):
            assert all(p < k for p in node.premises)
        else:
            assert isinstance(node, BatchInitial)


def _nested_keys(batch):
    keys = []
    for node in batch.nodes:
        if isinstance(node, BatchInitial):
            keys.append(("I", node.tag, node.level))
        else:
            keys.append(("D", node.rule, tuple(keys[p] for p in node.premises)))
    return keys


def test_collapsed_targets_follow_weighted_average(make_dag):
    config = ModelConfig(n=4, revealed_axioms=["ax0", "ax1", "ax2"])
    for trial in range(50):
        rng = np.random.default_rng(1000 + trial)
        dags = [make_dag(int(s), f"p{i}", 12) for i, s in enumerate(rng.integers(0, 10**6, size=rng.integers(2, 7)))]
        expected: dict[tuple, list[tuple[float, float]]] = {}
        for dag in dags:
            keys = node_keys(dag, config)
            for ex in label_dag(dag):
                expected.setdefault(keys[ex.node], []).append((ex.target, ex.weight))

        batch = merge_batch(dags, config.revealed_axioms, config.key_cap)
        keys = _nested_keys(batch)
        assert {keys[k] for k in batch.example_nodes} == set(expected)
        for k in batch.example_nodes:
            pairs = expected[keys[k]]
            weight = sum(w for _, w in pairs)
            assert batch.weights[k] == pytest.approx(weight, rel=1e-12)
            assert batch.targets[k] == pytest.approx(sum(t * w for t, w in pairs) / weight, rel=1e-12)


def test_pack_first_fit_decreasing():
    assert pack([5, 5, 5], 11) == [[0, 1], [2]]
    assert pack([30, 1], 20) == [[0], [1]]
    assert pack([2, 7, 3], 100) == [[1, 2, 0]]
    # bins stay strictly below the target
    assert pack([15000, 6000, 5000, 4000], 20000) == [[0, 3], [1, 2]]
