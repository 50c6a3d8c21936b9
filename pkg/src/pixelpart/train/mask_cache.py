"""Per-example budget masks with a refresh schedule.

Masks are all ones until the burn-in ends. From epoch burn_in on, an
example's mask is recomputed at epochs burn_in, burn_in + s, burn_in + 2s,
... and served from the cache in between.
"""

import logging
import time
from pathlib import Path
from typing import Callable, List, Sequence, Union

import numpy as np
import torch

from ..core.tensors import BudgetMask

logger = logging.getLogger(__name__)

MaskComputer = Callable[[torch.Tensor], BudgetMask]


class MaskCache:
    """Stores one H x W mask per training example.

    Attributes:
        masks: N x H x W multipliers
        last_refresh: Epoch each mask was last computed (-1 for never)
        invocations: Number of CAM evaluations per example
        refresh_epochs: Epochs at which at least one mask was recomputed
        refresh_seconds: Wall time spent computing masks, summed over the run
    """

    def __init__(
        self,
        num_examples: int,
        spatial_shape: Sequence[int],
        eps: float,
        eps_low: float,
        burn_in: int,
        save_freq: int,
        dtype: torch.dtype = torch.float32,
    ):
        self.eps = eps
        self.eps_low = eps_low
        self.burn_in = burn_in
        self.save_freq = save_freq
        self.masks = torch.ones((num_examples, *spatial_shape), dtype=dtype)
        self.last_refresh = np.full(num_examples, -1, dtype=np.int64)
        self.invocations = np.zeros(num_examples, dtype=np.int64)
        self.refresh_epochs: List[int] = []
        self.refresh_seconds = 0.0

    def __len__(self) -> int:
        return self.masks.shape[0]

    def is_due(self, epoch: int) -> bool:
        return epoch >= self.burn_in and (epoch - self.burn_in) % self.save_freq == 0

    def lookup(self, indices: torch.Tensor) -> BudgetMask:
        return BudgetMask(self.masks[indices], self.eps, self.eps_low)

    def serve(self, indices: torch.Tensor, epoch: int, compute: MaskComputer) -> BudgetMask:
        """Masks for a batch, recomputing the ones that are due this epoch."""
        if epoch < self.burn_in:
            return BudgetMask.all_ones(
                (len(indices), *self.masks.shape[1:]), self.eps, self.eps_low, self.masks.dtype
            )

        rows = indices.cpu().numpy()
        stale = self.last_refresh[rows] != epoch
        cold = self.last_refresh[rows] < 0
        todo = stale & (cold | self.is_due(epoch))
        if todo.any():
            selected = indices[torch.from_numpy(todo)]
            started = time.perf_counter()
            fresh = compute(selected)
            self.refresh_seconds += time.perf_counter() - started
            self.masks[selected] = fresh.m.to(self.masks.dtype).cpu()
            self.last_refresh[rows[todo]] = epoch
            self.invocations[rows[todo]] += 1
            if not self.refresh_epochs or self.refresh_epochs[-1] != epoch:
                self.refresh_epochs.append(epoch)
            logger.debug("epoch %d: refreshed %d masks", epoch, int(todo.sum()))
        return self.lookup(indices)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as stream:
            np.savez(
                stream,
                masks=self.masks.numpy(),
                last_refresh=self.last_refresh,
                invocations=self.invocations,
                refresh_epochs=np.asarray(self.refresh_epochs, dtype=np.int64),
                budgets=np.asarray([self.eps, self.eps_low], dtype=np.float64),
                schedule=np.asarray([self.burn_in, self.save_freq], dtype=np.int64),
            )
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MaskCache":
        with np.load(Path(path)) as data:
            masks = torch.from_numpy(data["masks"].copy())
            eps, eps_low = (float(v) for v in data["budgets"])
            burn_in, save_freq = (int(v) for v in data["schedule"])
            cache = cls(len(masks), masks.shape[1:], eps, eps_low, burn_in, save_freq, masks.dtype)
            cache.masks = masks
            cache.last_refresh = data["last_refresh"].copy()
            cache.invocations = data["invocations"].copy()
            cache.refresh_epochs = [int(v) for v in data["refresh_epochs"]]
        return cache
