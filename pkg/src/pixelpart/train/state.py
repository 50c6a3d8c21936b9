"""Mutable training state and per-epoch metric rows."""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol

import numpy as np
import torch
from typing_extensions import TypedDict

from ..core.specs import TrainSpec
from ..core.tensors import BudgetMask
from ..nn.models import ModelBackend
from .mask_cache import MaskCache


class LabeledImages(Protocol):
    """Anything with an N x C x H x W image tensor and N labels."""

    images: torch.Tensor
    labels: torch.Tensor


class EpochMetrics(TypedDict):
    epoch: int
    lr: float
    train_loss: float
    nat_acc: float
    rob_acc_pgd10: float
    epoch_seconds: float
    mask_refresh_seconds: float


METRIC_COLUMNS = tuple(EpochMetrics.__annotations__)


@dataclass(frozen=True)
class BatchRecord:
    """What the trainer did on one batch; handed to on_batch observers."""

    epoch: int
    batch_index: int
    indices: torch.Tensor
    mask: Optional[BudgetMask]
    loss: float


BatchObserver = Callable[[BatchRecord], None]


@dataclass
class TrainState:
    """Everything that evolves during a training run.

    Attributes:
        model: Parameters being trained (single writer)
        spec: Run configuration
        dataset: Training examples; the mask cache is keyed by their index
        cache: Per-example budget masks and refresh bookkeeping
        epoch: Next epoch to run (0-based); equals spec.epochs when done
        history: One metrics row per finished epoch
    """

    model: ModelBackend
    spec: TrainSpec
    dataset: LabeledImages
    cache: MaskCache
    epoch: int = 0
    history: List[EpochMetrics] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.spec.seed

    @property
    def cam_invocations(self) -> np.ndarray:
        return self.cache.invocations

    @property
    def finished(self) -> bool:
        return self.epoch >= self.spec.epochs
