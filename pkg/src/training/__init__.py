"""Loss, gradients and the training loops."""
from .loss import Rates, backward, bce_with_logits, evaluate_batches, forward, loss, rates
from .trainer import (
    EpochStats,
    TrainConfig,
    TrainResult,
    apply_swapout,
    lr_schedule,
    split_batches,
    train,
    train_parallel,
    train_sequential,
    write_stats,
)

__all__ = [
    "EpochStats",
    "Rates",
    "TrainConfig",
    "TrainResult",
    "apply_swapout",
    "backward",
    "bce_with_logits",
    "evaluate_batches",
    "forward",
    "loss",
    "lr_schedule",
    "rates",
    "split_batches",
    "train",
    "train_parallel",
    "train_sequential",
    "write_stats",
]
