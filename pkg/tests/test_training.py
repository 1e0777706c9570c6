"""Tests for the loss, its gradient and both training loops."""
import numpy as np
import pytest
from pydantic import ValidationError

from src.derivation import merge_batch
from src.derivation.batch import BatchDerived
from src.errors import TrainingError
from src.model import Model, ModelConfig
from src.prover.saturation import saturate
from src.training import (
    TrainConfig,
    apply_swapout,
    backward,
    evaluate_batches,
    loss,
    lr_schedule,
    rates,
    split_batches,
    train,
    train_parallel,
    train_sequential,
    write_stats,
)
from tests.conftest import AXIOM_NAMES


def _batch(dags, config):
    return merge_batch(dags, config.revealed_axioms, config.key_cap)


def _gradient_agreement(batch, model, swapout=None, h=1e-5):
    """Fraction of coordinates where the analytic and central-difference gradients agree."""
    _, grad = backward(batch, model, swapout)
    good = total = 0
    for name, tensor in model.params.items():
        flat = tensor.reshape(-1)
        analytic = grad[name].reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = loss(batch, model, swapout)
            flat[i] = saved - h
            down = loss(batch, model, swapout)
            flat[i] = saved
            numeric = (up - down) / (2 * h)
            total += 1
            if abs(numeric - analytic[i]) <= 1e-4 * max(abs(numeric), abs(analytic[i])) + 1e-8:
                good += 1
    return good / total


def test_gradient_matches_finite_differences(make_dag):
    config = ModelConfig(n=8, revealed_axioms=AXIOM_NAMES[:5])
    for seed in range(10):
        model = Model.initialize(config, seed)
        batch = _batch([make_dag(seed, max_nodes=50)], config)
        assert _gradient_agreement(batch, model) >= 0.99, seed


def test_generic_gradient_under_swapout(make_dag):
    config = ModelConfig(n=4, revealed_axioms=AXIOM_NAMES[:3])
    model = Model.initialize(config, 1)
    batch = _batch([make_dag(7), make_dag(8)], config)
    flags = np.array([isinstance(node, BatchDerived) for node in batch.nodes])
    _, grad = backward(batch, model, flags)
    assert not any(grad[k].any() for k in grad if k.startswith("deriv."))
    assert _gradient_agreement(batch, model, flags) >= 0.97


def test_merged_loss_is_the_sum_of_member_losses(make_dag):
    config = ModelConfig(n=6, revealed_axioms=AXIOM_NAMES[:4])
    model = Model.initialize(config, 3)
    for trial in range(50):
        rng = np.random.default_rng(trial)
        dags = [make_dag(int(s), f"p{i}", 15) for i, s in enumerate(rng.integers(0, 10**6, size=rng.integers(2, 7)))]
        merged = loss(_batch(dags, config), model)
        separate = sum(loss(_batch([d], config), model) for d in dags)
        assert merged == pytest.approx(separate, rel=1e-9)


def test_non_finite_loss_raises(make_dag, small_model):
    small_model.params["eval.b2"][0] = np.inf
    with pytest.raises(TrainingError):
        backward(_batch([make_dag(0)], small_model.config), small_model)


# ---------- schedule and config ----------

def test_lr_schedule():
    config = TrainConfig(alpha_max=2.0e-4, warmup_epochs=40)
    assert lr_schedule(20, config) == pytest.approx(1.0e-4, rel=1e-12)
    assert lr_schedule(40, config) == pytest.approx(2.0e-4, rel=1e-12)
    assert lr_schedule(80, config) == pytest.approx(1.0e-4, rel=1e-12)
    assert lr_schedule(5, TrainConfig(warmup_epochs=0)) == 2.0e-4
    with pytest.raises(ValueError):
        lr_schedule(0, config)


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(split=1.0)
    with pytest.raises(ValidationError):
        TrainConfig(epochs=10, warmup_epochs=20)
    with pytest.raises(ValidationError):
        TrainConfig(swapout_p=1.5)
    with pytest.raises(ValidationError):
        TrainConfig(workers=0)


def test_split_batches(make_dag, small_config):
    batches = [_batch([make_dag(s)], small_config) for s in range(10)]
    train_set, val_set = split_batches(batches, 0.9, seed=1)
    assert (len(train_set), len(val_set)) == (9, 1)
    assert split_batches(batches, 0.9, seed=1)[1][0] is val_set[0]
    only = batches[:1]
    assert split_batches(only, 0.9) == (only, only)


def test_swapout_flags_only_derived_nodes(make_dag, small_config):
    batch = _batch([make_dag(2)], small_config)
    rng = np.random.default_rng(0)
    derived = np.array([isinstance(n, BatchDerived) for n in batch.nodes])
    assert not apply_swapout(batch, 0.0, rng).any()
    np.testing.assert_array_equal(apply_swapout(batch, 1.0, rng), derived)


def test_swapout_rate_over_many_nodes(make_dag, small_config):
    batch = _batch([make_dag(s, f"p{s}", 50) for s in range(40)], small_config)
    derived = sum(isinstance(n, BatchDerived) for n in batch.nodes)
    rng = np.random.default_rng(5)
    draws = -(-10_000 // derived)
    flagged = sum(int(apply_swapout(batch, 0.1, rng).sum()) for _ in range(draws))
    n = draws * derived
    assert n >= 10_000
    assert abs(flagged - 0.1 * n) <= 3 * np.sqrt(n * 0.1 * 0.9)


def test_rates_name_a_missing_class(small_model, tiny_positive_dag):
    r = rates(_batch([tiny_positive_dag], small_model.config), small_model)
    assert r.missing == ("negative",)
    assert r.tnr == 1.0
    assert 0.0 <= r.tpr <= 1.0


@pytest.fixture
def tiny_positive_dag(syllogism):
    dag = saturate(syllogism).dag
    dag.selected &= dag.proof
    return dag


# ---------- training loops ----------

@pytest.fixture
def batches(make_dag, small_config):
    return [_batch([make_dag(s), make_dag(s + 100)], small_config) for s in range(6)]


def test_training_lowers_the_loss(batches, small_model):
    before = small_model.params.copy()
    config = TrainConfig(epochs=30, alpha_max=0.05, warmup_epochs=0, split=0.5)
    result = train_sequential(batches, small_model, config)
    assert len(result.stats) == 31
    assert result.stats[-1].train_loss < result.stats[0].train_loss
    assert result.best.val_loss == result.best_val_loss
    assert result.best_epoch >= 1
    # the input model is left untouched
    assert all(np.array_equal(before[k], small_model.params[k]) for k in before)


def test_best_model_reproduces_its_validation_loss(batches, small_model):
    config = TrainConfig(epochs=5, alpha_max=0.05, warmup_epochs=0, split=0.5)
    result = train(batches, small_model, config)
    _, val = split_batches(batches, config.split, config.seed)
    val_loss, _ = evaluate_batches(val, result.model)
    assert val_loss == pytest.approx(result.best_val_loss, rel=1e-12)


def test_same_seed_repeats_the_run(batches, small_model):
    config = TrainConfig(epochs=3, alpha_max=0.05, warmup_epochs=1, split=0.5, swapout_p=0.2, seed=7)
    first = train_sequential(batches, small_model, config)
    second = train_sequential(batches, small_model, config)
    assert first.stats == second.stats
    assert first.best_epoch == second.best_epoch
    assert all(np.array_equal(first.model.params[k], second.model.params[k]) for k in small_model.params)


def test_zero_epochs_returns_the_initial_model(batches, small_model):
    result = train(batches, small_model, TrainConfig(epochs=0, warmup_epochs=0, split=0.5))
    assert [s.epoch for s in result.stats] == [0]
    assert result.best_epoch == 0
    assert all(np.array_equal(result.model.params[k], small_model.params[k]) for k in small_model.params)


def test_one_worker_matches_sequential(batches, small_model):
    config = TrainConfig(epochs=3, alpha_max=0.05, warmup_epochs=1, split=0.5, seed=4)
    sequential = train_sequential(batches, small_model, config)
    parallel = train_parallel(batches, small_model, config)
    for s, p in zip(sequential.stats, parallel.stats):
        assert p.train_loss == pytest.approx(s.train_loss, rel=1e-6)
        assert p.mean_drift == 0.0
    for name in sequential.model.params:
        np.testing.assert_allclose(parallel.model.params[name], sequential.model.params[name], rtol=1e-9)


def test_stale_gradients_with_two_workers(batches, small_model):
    config = TrainConfig(epochs=2, alpha_max=0.01, warmup_epochs=0, split=0.5, workers=2)
    result = train(batches, small_model, config)
    assert len(result.stats) == 3
    assert all(np.isfinite(s.train_loss) for s in result.stats)
    assert all(s.mean_drift >= 0.0 for s in result.stats)


def test_swapout_trains_generic_blocks(batches, small_model):
    config = TrainConfig(epochs=3, alpha_max=0.05, warmup_epochs=0, split=0.5, swapout_p=0.5)
    result = train_sequential(batches, small_model, config)
    assert result.model.config.has_generic
    assert not np.array_equal(result.model.params["generic.2.W"], small_model.params["generic.2.W"])


def test_write_stats(tmp_path, batches, small_model):
    result = train_sequential(batches, small_model, TrainConfig(epochs=2, warmup_epochs=0, split=0.5))
    path = write_stats(result.stats, tmp_path / "stats.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,tpr,tnr,alpha,mean_drift"
    assert len(lines) == 4
