"""Gradient-descent training: sequential, and master-worker with stale gradients."""
import csv
import logging
import multiprocessing
import queue
import traceback
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from src.derivation.batch import Batch, BatchDerived
from src.errors import TrainingError
from src.model.network import Model, ModelConfig, ModelParams
from .loss import backward, evaluate_batches

logger = logging.getLogger(__name__)

STATS_COLUMNS = ["epoch", "train_loss", "val_loss", "tpr", "tnr", "alpha", "mean_drift"]
WORKER_POLL_SECONDS = 1.0


class TrainConfig(BaseModel):
    epochs: int = 100
    alpha_max: float = 2.0e-4
    warmup_epochs: int = 40
    split: float = 0.9
    swapout_p: float = 0.0
    workers: int = 1
    seed: int = 0

    @field_validator("epochs", "warmup_epochs")
    @classmethod
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must be >= 0")
        return value

    @field_validator("split")
    @classmethod
    def _split_range(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("split must lie strictly between 0 and 1")
        return value

    @field_validator("swapout_p")
    @classmethod
    def _probability(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError("swapout_p must lie in [0, 1]")
        return value

    @field_validator("workers")
    @classmethod
    def _workers(cls, value: int) -> int:
        if value < 1:
            raise ValueError("workers must be >= 1")
        return value

    @model_validator(mode="after")
    def _warmup_fits(self) -> "TrainConfig":
        if self.warmup_epochs > self.epochs:
            raise ValueError(f"warmup_epochs ({self.warmup_epochs}) exceeds epochs ({self.epochs})")
        return self


class EpochStats(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    tpr: float
    tnr: float
    alpha: float = 0.0
    mean_drift: float = 0.0


@dataclass
class TrainResult:
    model: Model
    stats: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")

    @property
    def best(self) -> EpochStats:
        return self.stats[self.best_epoch]


def lr_schedule(t: int, config: TrainConfig) -> float:
    """Linear warmup to alpha_max at epoch `warmup`, then warmup * alpha_max / t.

    Without warmup the rate stays at alpha_max.
    """
    if t <= 0:
        raise ValueError(f"epochs count from 1, got {t}")
    warmup = config.warmup_epochs
    if warmup == 0:
        return config.alpha_max
    if t <= warmup:
        return t * config.alpha_max / warmup
    return warmup * config.alpha_max / t


def apply_swapout(batch: Batch, p: float, rng: np.random.Generator) -> np.ndarray:
    """Per-node flags: True where a derived node uses its generic block this time."""
    derived = np.array([isinstance(node, BatchDerived) for node in batch.nodes], dtype=bool)
    if p <= 0.0:
        return np.zeros(len(batch), dtype=bool)
    return derived & (rng.random(len(batch)) < p)


def split_batches(
    batches: Sequence[Batch], split: float, seed: int = 0
) -> tuple[list[Batch], list[Batch]]:
    """Seeded shuffle, then the first `split` fraction trains and the rest validates."""
    batches = list(batches)
    if len(batches) < 2:
        logger.warning("[TRAIN] fewer than two batches; validating on the training set")
        return batches, batches
    order = np.random.default_rng(seed).permutation(len(batches))
    cut = min(max(int(round(split * len(batches))), 1), len(batches) - 1)
    return [batches[i] for i in order[:cut]], [batches[i] for i in order[cut:]]


class _Run:
    """Bookkeeping shared by both training modes: stats rows and best snapshot."""

    def __init__(self, model: Model, train: list[Batch], val: list[Batch], config: TrainConfig):
        self.model = Model(model.config, model.params.copy())
        self.train, self.val = train, val
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.result = TrainResult(Model(model.config, model.params.copy()))
        self.train_weight = sum(b.total_weight for b in train) or 1.0
        train_loss, _ = evaluate_batches(train, self.model)
        self._finish_epoch(0, train_loss, 0.0, 0.0)

    def epoch_tasks(self) -> list[tuple[int, Optional[np.ndarray]]]:
        """Shuffled batch order for one epoch with the swapout flags of each batch."""
        tasks = []
        for i in self.rng.permutation(len(self.train)):
            flags = None
            if self.config.swapout_p > 0:
                flags = apply_swapout(self.train[i], self.config.swapout_p, self.rng)
            tasks.append((int(i), flags))
        return tasks

    def apply(self, grad: ModelParams, alpha: float, epoch: int) -> None:
        self.model.params.add_scaled(grad, -alpha)
        if not self.model.params.is_finite():
            raise TrainingError("parameters diverged", epoch=epoch)

    def _finish_epoch(self, epoch: int, train_loss: float, alpha: float, drift: float) -> EpochStats:
        if not np.isfinite(train_loss):
            raise TrainingError(f"non-finite training loss {train_loss}", epoch=epoch)
        val_loss, r = evaluate_batches(self.val, self.model)
        stats = EpochStats(
            epoch=epoch, train_loss=train_loss, val_loss=val_loss,
            tpr=r.tpr, tnr=r.tnr, alpha=alpha, mean_drift=drift,
        )
        self.result.stats.append(stats)
        # the untrained model of epoch 0 stands only until the first trained epoch
        if epoch <= 1 or val_loss < self.result.best_val_loss:
            self.result.best_epoch = epoch
            self.result.best_val_loss = val_loss
            self.result.model = Model(self.model.config, self.model.params.copy())
        logger.info(
            f"[TRAIN] epoch {epoch}: train {train_loss:.4f} val {val_loss:.4f} "
            f"tpr {r.tpr:.3f} tnr {r.tnr:.3f} alpha {alpha:.2e} drift {drift:.2f}"
        )
        return stats

    def finish_epoch(self, epoch: int, loss_sum: float, alpha: float, drift: float) -> EpochStats:
        return self._finish_epoch(epoch, loss_sum / self.train_weight, alpha, drift)

    def done(self) -> TrainResult:
        result = self.result
        if self.config.swapout_p > 0:
            result.model.config = result.model.config.model_copy(update={"has_generic": True})
        return result


def _prepare(batches: Sequence[Batch], model: Model, config: TrainConfig) -> _Run:
    train, val = split_batches(batches, config.split, config.seed)
    logger.info(f"[TRAIN] {len(train)} training and {len(val)} validation batches")
    return _Run(model, train, val, config)


def train_sequential(batches: Sequence[Batch], model: Model, config: TrainConfig) -> TrainResult:
    """Plain SGD over shuffled batches; returns the snapshot with the lowest validation loss."""
    run = _prepare(batches, model, config)
    for epoch in range(1, config.epochs + 1):
        alpha = lr_schedule(epoch, config)
        loss_sum = 0.0
        for i, flags in run.epoch_tasks():
            try:
                value, grad = backward(run.train[i], run.model, flags)
            except TrainingError as e:
                raise TrainingError(f"batch {i} diverged", epoch=epoch, block=e.block) from e
            loss_sum += value
            run.apply(grad, alpha, epoch)
        run.finish_epoch(epoch, loss_sum, alpha, 0.0)
    return run.done()


def _gradient_worker(
    config: ModelConfig,
    batches: list[Batch],
    tasks: "multiprocessing.Queue",
    results: "multiprocessing.Queue",
    worker_idx: int,
) -> None:
    while True:
        task = tasks.get()
        if task is None:
            return
        task_id, version, batch_idx, params, flags = task
        try:
            value, grad = backward(batches[batch_idx], Model(config, params), flags)
            results.put((worker_idx, task_id, version, value, grad, None))
        except Exception:
            results.put((worker_idx, task_id, version, 0.0, None, traceback.format_exc()))


@dataclass
class _Task:
    task_id: int
    batch_idx: int
    flags: Optional[np.ndarray]
    attempts: int = 0


def train_parallel(batches: Sequence[Batch], model: Model, config: TrainConfig) -> TrainResult:
    """Master-worker training with stale gradients.

    The master owns the parameters. An idle worker receives a snapshot taken
    at version t together with a batch; its gradient is applied on arrival to
    whatever version T the master holds by then, using the current epoch's
    learning rate. Drift is T - t. A failed task is reissued once.
    """
    run = _prepare(batches, model, config)
    ctx = multiprocessing.get_context()
    results = ctx.Queue()
    task_queues = [ctx.Queue() for _ in range(config.workers)]
    workers = [
        ctx.Process(
            target=_gradient_worker,
            args=(model.config, run.train, task_queues[w], results, w),
            daemon=True,
        )
        for w in range(config.workers)
    ]
    for worker in workers:
        worker.start()

    version = 0
    try:
        for epoch in range(1, config.epochs + 1):
            alpha = lr_schedule(epoch, config)
            pending = deque(
                _Task(task_id, i, flags) for task_id, (i, flags) in enumerate(run.epoch_tasks())
            )
            in_flight: dict[int, _Task] = {}
            idle = deque(range(config.workers))
            loss_sum, drifts = 0.0, []

            while pending or in_flight:
                while pending and idle:
                    w = idle.popleft()
                    task = pending.popleft()
                    task.attempts += 1
                    in_flight[w] = task
                    task_queues[w].put(
                        (task.task_id, version, task.batch_idx, run.model.params.copy(), task.flags)
                    )
                try:
                    w, task_id, issued, value, grad, error = results.get(timeout=WORKER_POLL_SECONDS)
                except queue.Empty:
                    for w, task in list(in_flight.items()):
                        if not workers[w].is_alive():
                            del in_flight[w]
                            _reissue(task, pending, epoch, f"worker {w} exited")
                    if not any(p.is_alive() for p in workers):
                        raise TrainingError("all training workers exited", epoch=epoch)
                    continue
                task = in_flight.pop(w)
                idle.append(w)
                if error is not None:
                    _reissue(task, pending, epoch, error)
                    continue
                run.apply(grad, alpha, epoch)
                drifts.append(version - issued)
                version += 1
                loss_sum += value
            run.finish_epoch(epoch, loss_sum, alpha, float(np.mean(drifts)) if drifts else 0.0)
    finally:
        for q in task_queues:
            q.put(None)
        for worker in workers:
            worker.join(timeout=5)
            if worker.is_alive():
                worker.terminate()
    return run.done()


def _reissue(task: _Task, pending: deque, epoch: int, reason: str) -> None:
    if task.attempts >= 2:
        raise TrainingError(f"batch {task.batch_idx} failed twice: {reason}", epoch=epoch)
    logger.warning(f"[TRAIN] batch {task.batch_idx} failed, reissuing: {reason.strip().splitlines()[-1]}")
    pending.appendleft(task)


def train(batches: Sequence[Batch], model: Model, config: TrainConfig) -> TrainResult:
    """Sequential for one worker, master-worker otherwise."""
    if config.workers == 1:
        return train_sequential(batches, model, config)
    return train_parallel(batches, model, config)


def write_stats(stats: Sequence[EpochStats], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=STATS_COLUMNS)
        writer.writeheader()
        for row in stats:
            writer.writerow(row.model_dump())
    return path
