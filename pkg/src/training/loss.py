"""Weighted binary cross-entropy over merged batches and its exact gradient.

The forward pass keeps a tape of every affine step (input, pre-activation) so
the backward pass can walk the collapsed DAG in reverse, summing the gradient
of a shared node over all of its consumers.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from src.derivation.batch import Batch, BatchDerived
from src.errors import TrainingError
from src.model.network import Model, ModelParams, deriv_block, init_row, relu, sine_feature


def bce_with_logits(scores: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """-(y log sigmoid(s) + (1-y) log(1 - sigmoid(s))), stable for large |s|."""
    return np.logaddexp(0.0, scores) - targets * scores


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class Step:
    block: str
    x: np.ndarray
    z: np.ndarray


@dataclass
class Tape:
    vectors: np.ndarray
    steps: list[list[Step]]
    rows: list[Optional[int]]
    examples: np.ndarray
    hidden_pre: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0))


def forward(batch: Batch, model: Model, swapout: Optional[np.ndarray] = None) -> Tape:
    """Embed every batch node in order and score the example nodes."""
    params, config = model.params, model.config
    n = config.n
    vectors = np.zeros((len(batch), n))
    steps: list[list[Step]] = []
    rows: list[Optional[int]] = []
    for k, node in enumerate(batch.nodes):
        if isinstance(node, BatchDerived):
            use_generic = bool(swapout[k]) if swapout is not None else False
            block = deriv_block(node.rule, params, use_generic)
            W, b = params[f"{block}.W"], params[f"{block}.b"]
            inputs = [vectors[p] for p in node.premises]
            x = inputs[0] if len(inputs) == 1 else np.concatenate(inputs[:2])
            node_steps = [Step(block, x, W @ x + b)]
            for v in inputs[2:]:
                x = np.concatenate((relu(node_steps[-1].z), v))
                node_steps.append(Step(block, x, W @ x + b))
            vectors[k] = relu(node_steps[-1].z)
            steps.append(node_steps)
            rows.append(None)
        else:
            row = init_row(node.tag, config)
            base = params["init"][row]
            if config.use_sine:
                x = np.append(base, sine_feature(node.level, config.sine_cap))
                z = params["sine.W"] @ x + params["sine.b"]
                steps.append([Step("sine", x, z)])
                vectors[k] = relu(z)
            else:
                steps.append([])
                vectors[k] = base
            rows.append(row)

    examples = batch.example_nodes
    hidden_pre = vectors[examples] @ params["eval.W1"].T + params["eval.b1"]
    scores = (relu(hidden_pre) @ params["eval.w2"].T).ravel() + params["eval.b2"][0]
    return Tape(vectors, steps, rows, examples, hidden_pre, scores)


def batch_loss(batch: Batch, tape: Tape) -> float:
    ex = tape.examples
    return float(np.sum(batch.weights[ex] * bce_with_logits(tape.scores, batch.targets[ex])))


def loss(batch: Batch, model: Model, swapout: Optional[np.ndarray] = None) -> float:
    """Sum over example nodes of weight * BCE(sigmoid(score), target)."""
    return batch_loss(batch, forward(batch, model, swapout))


def backward(
    batch: Batch,
    model: Model,
    swapout: Optional[np.ndarray] = None,
    tape: Optional[Tape] = None,
) -> tuple[float, ModelParams]:
    """Loss of the batch and its gradient with respect to every parameter.

    Raises:
        TrainingError: if the loss or any gradient block is not finite
    """
    params, n = model.params, model.config.n
    tape = tape if tape is not None else forward(batch, model, swapout)
    grad = params.zeros_like()
    G = grad.tensors
    ex = tape.examples

    value = batch_loss(batch, tape)
    if not np.isfinite(value):
        raise TrainingError(f"non-finite loss {value}")

    # eval head
    g = batch.weights[ex] * (sigmoid(tape.scores) - batch.targets[ex])
    hidden = relu(tape.hidden_pre)
    G["eval.w2"] += (g @ hidden)[None, :]
    G["eval.b2"] += g.sum()
    d_pre = np.outer(g, params["eval.w2"][0]) * (tape.hidden_pre > 0)
    G["eval.W1"] += d_pre.T @ tape.vectors[ex]
    G["eval.b1"] += d_pre.sum(axis=0)
    d_vec = np.zeros_like(tape.vectors)
    np.add.at(d_vec, ex, d_pre @ params["eval.W1"])

    # embeddings, consumers before premises
    for k in range(len(batch) - 1, -1, -1):
        d = d_vec[k]
        if not d.any():
            continue
        node = batch.nodes[k]
        node_steps = tape.steps[k]
        if isinstance(node, BatchDerived):
            for i in range(len(node_steps) - 1, -1, -1):
                step = node_steps[i]
                W = params[f"{step.block}.W"]
                dz = d * (step.z > 0)
                G[f"{step.block}.W"] += np.outer(dz, step.x)
                G[f"{step.block}.b"] += dz
                dx = W.T @ dz
                if i == 0:
                    for j, p in enumerate(node.premises[:2]):
                        d_vec[p] += dx[j * n:(j + 1) * n]
                else:
                    d_vec[node.premises[i + 1]] += dx[n:]
                    d = dx[:n]
        else:
            if node_steps:
                step = node_steps[0]
                dz = d * (step.z > 0)
                G["sine.W"] += np.outer(dz, step.x)
                G["sine.b"] += dz
                d = (params["sine.W"].T @ dz)[:n]
            G["init"][tape.rows[k]] += d

    for name, tensor in G.items():
        if not np.isfinite(tensor).all():
            raise TrainingError("non-finite gradient", block=name)
    return value, grad


class Rates(NamedTuple):
    """Weighted true positive / true negative rates; a missing class reads 1.0 and is named."""
    tpr: float
    tnr: float
    missing: tuple[str, ...] = ()


class RateCounter:
    """Accumulates weighted hits over several batches."""

    def __init__(self):
        self.pos_hit = self.pos_total = 0.0
        self.neg_hit = self.neg_total = 0.0

    def add(self, batch: Batch, scores: np.ndarray) -> None:
        ex = batch.example_nodes
        weights, positive = batch.weights[ex], batch.targets[ex] > 0.5
        predicted = scores >= 0.0
        self.pos_total += float(weights[positive].sum())
        self.pos_hit += float(weights[positive & predicted].sum())
        self.neg_total += float(weights[~positive].sum())
        self.neg_hit += float(weights[~positive & ~predicted].sum())

    def rates(self) -> Rates:
        missing = []
        tpr = tnr = 1.0
        if self.pos_total > 0:
            tpr = self.pos_hit / self.pos_total
        else:
            missing.append("positive")
        if self.neg_total > 0:
            tnr = self.neg_hit / self.neg_total
        else:
            missing.append("negative")
        return Rates(tpr, tnr, tuple(missing))


def rates(batch: Batch, model: Model) -> Rates:
    counter = RateCounter()
    counter.add(batch, forward(batch, model).scores)
    return counter.rates()


def evaluate_batches(batches: list[Batch], model: Model) -> tuple[float, Rates]:
    """Mean loss per derivation and weighted rates over batches, swapout disabled."""
    total = weight = 0.0
    counter = RateCounter()
    for batch in batches:
        tape = forward(batch, model)
        total += batch_loss(batch, tape)
        weight += batch.total_weight
        counter.add(batch, tape.scores)
    return (total / weight if weight > 0 else 0.0), counter.rates()
