"""Outer minimization: reweighted adversarial training and evaluation."""

from .evaluate import EvaluationResult, evaluate
from .losses import inner_loss, loss_at, loss_mart, loss_trades, mart_from_logits, method_loss
from .mask_cache import MaskCache
from .state import BatchRecord, EpochMetrics, LabeledImages, TrainState
from .trainer import Trainer, derive_seed, refresh_masks, train, write_metrics_csv

__all__ = [
    "loss_at",
    "loss_trades",
    "loss_mart",
    "mart_from_logits",
    "method_loss",
    "inner_loss",
    "MaskCache",
    "refresh_masks",
    "TrainState",
    "EpochMetrics",
    "BatchRecord",
    "LabeledImages",
    "Trainer",
    "train",
    "derive_seed",
    "write_metrics_csv",
    "evaluate",
    "EvaluationResult",
]
