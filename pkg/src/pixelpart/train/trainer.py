"""Adversarial training loop for AT, TRADES, MART and their reweighted variants."""

import csv
import time
from pathlib import Path
from typing import Optional, Union

import numpy as np
import torch

from ..attack.masks import cam_mask
from ..attack.pgd import pgd, pixel_ag
from ..base.exceptions import NonFiniteError, SpecValidationError
from ..base.loggable import Loggable
from ..core.specs import MaskMode, TrainSpec, replace_spec
from ..core.tensors import BudgetMask
from ..nn.checkpoint import save_checkpoint
from ..nn.models import ModelBackend
from ..registry.cam_registry import get_cam_method
from ..utils.validation import ensure_valid_model_backend
from .losses import inner_loss, method_loss
from .mask_cache import MaskCache
from .state import (
    METRIC_COLUMNS,
    BatchObserver,
    BatchRecord,
    EpochMetrics,
    LabeledImages,
    TrainState,
)

PathLike = Union[str, Path]


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for a (seed, key...) tuple."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, dtype=np.uint32)[0])


def refresh_masks(state: TrainState, batch_indices: torch.Tensor) -> BudgetMask:
    """Masks for a batch at the state's epoch, recomputing those that are due.

    Before the burn-in ends the cache is untouched and all ones are served.
    """
    spec = state.spec

    def compute(rows: torch.Tensor) -> BudgetMask:
        return cam_mask(
            state.model,
            state.dataset.images[rows],
            state.dataset.labels[rows],
            spec.attack.eps,
            spec.attack.eps_low,
            spec.cam_method,
            spec.cam_layer,
            spec.scaling,
        )

    return state.cache.serve(batch_indices, state.epoch, compute)


class Trainer(Loggable):
    """Runs minibatch SGD on adversarial examples.

    Per batch the trainer crafts adversarial examples (Pixel-AG for the
    reweighted methods after burn-in, PGD otherwise), evaluates the method's
    objective and takes one SGD step. A fixed_mask (e.g. regional quadrant
    budgets) replaces CAM masks for every epoch, burn-in included.
    """

    def __init__(
        self,
        dataset: LabeledImages,
        spec: TrainSpec,
        model: ModelBackend,
        fixed_mask: Optional[BudgetMask] = None,
        on_batch: Optional[BatchObserver] = None,
        out_dir: Optional[PathLike] = None,
    ):
        if dataset.images.shape[0] < 1:
            raise SpecValidationError("empty dataset")
        uses_cam = spec.method.is_part and fixed_mask is None
        ensure_valid_model_backend(model, require_cam_layer=uses_cam)
        if uses_cam:
            get_cam_method(spec.cam_method)
        self.dataset = dataset
        self.spec = spec
        self.model = model
        self.fixed_mask = fixed_mask
        self.on_batch = on_batch
        self.out_dir = Path(out_dir) if out_dir is not None else None

        attack = spec.attack
        if spec.method.is_part or fixed_mask is not None:
            attack = replace_spec(attack, mask_mode=MaskMode.PIXEL_AG.value)
        self.attack_spec = attack
        self.attack_loss = inner_loss(spec.method)
        self.optimizer = torch.optim.SGD(
            model.parameters(),
            lr=spec.learning_rate,
            momentum=spec.momentum,
            weight_decay=spec.weight_decay,
        )
        cache = MaskCache(
            dataset.images.shape[0],
            dataset.images.shape[-2:],
            attack.eps,
            attack.eps_low,
            spec.burn_in,
            spec.mask_save_freq,
            dataset.images.dtype,
        )
        self.state = TrainState(model=model, spec=spec, dataset=dataset, cache=cache)

    def log_context(self):
        return {"method": self.spec.method.value, "seed": self.spec.seed}

    def run(self) -> TrainState:
        self.logger.info(
            "Training for %d epochs on %d examples",
            self.spec.epochs,
            self.dataset.images.shape[0],
        )
        while not self.state.finished:
            self.run_epoch()
        if self.out_dir is not None:
            save_checkpoint(self.model, self.out_dir / "model_final.ckpt")
        return self.state

    def run_epoch(self) -> EpochMetrics:
        state = self.state
        epoch = state.epoch
        lr = self.spec.learning_rate_at(epoch)
        for group in self.optimizer.param_groups:
            group["lr"] = lr

        n = self.dataset.images.shape[0]
        order = torch.randperm(n, generator=torch.Generator().manual_seed(derive_seed(self.spec.seed, epoch)))
        started = time.perf_counter()
        refresh_before = state.cache.refresh_seconds
        total_loss = 0.0
        natural_correct = 0
        robust_correct = 0

        for batch_index, start in enumerate(range(0, n, self.spec.batch_size)):
            indices = order[start:start + self.spec.batch_size]
            loss, nat, rob = self._train_batch(epoch, batch_index, indices)
            total_loss += loss * len(indices)
            natural_correct += nat
            robust_correct += rob

        metrics = EpochMetrics(
            epoch=epoch,
            lr=lr,
            train_loss=total_loss / n,
            nat_acc=natural_correct / n,
            rob_acc_pgd10=robust_correct / n,
            epoch_seconds=time.perf_counter() - started,
            mask_refresh_seconds=state.cache.refresh_seconds - refresh_before,
        )
        state.history.append(metrics)
        state.epoch += 1
        self.logger.info(
            "epoch %d lr=%.6f loss=%.4f nat_acc=%.4f rob_acc=%.4f time=%.2fs (masks %.2fs)",
            epoch, lr, metrics["train_loss"], metrics["nat_acc"], metrics["rob_acc_pgd10"],
            metrics["epoch_seconds"], metrics["mask_refresh_seconds"],
        )
        self._write_outputs(metrics)
        return metrics

    def _train_batch(self, epoch: int, batch_index: int, indices: torch.Tensor):
        x = self.dataset.images[indices]
        labels = self.dataset.labels[indices].long()
        mask = self._mask_for(indices)
        attack_seed = derive_seed(self.spec.seed, epoch, 1)

        if mask is None:
            result = pgd(self.model, self.attack_loss, x, labels, self.attack_spec, attack_seed, indices.tolist())
        else:
            result = pixel_ag(
                self.model, self.attack_loss, x, labels, self.attack_spec, mask, attack_seed, indices.tolist()
            )
        x_adv = result.adversarial

        with torch.no_grad():
            natural_ok = self.model(x).argmax(dim=1) == labels
            robust_ok = natural_ok & ~result.success

        self.optimizer.zero_grad()
        loss = method_loss(self.spec.method, self.model, x, x_adv, labels, self.spec.lambda_)
        if not bool(torch.isfinite(loss)):
            raise NonFiniteError("training loss", epoch=epoch, batch=batch_index)
        loss.backward()
        self.optimizer.step()

        value = float(loss.detach())
        if batch_index % self.spec.log_interval == 0:
            self.logger.debug("epoch %d batch %d loss=%.6f", epoch, batch_index, value)
        if self.on_batch is not None:
            self.on_batch(BatchRecord(epoch, batch_index, indices, mask, value))
        return value, int(natural_ok.sum()), int(robust_ok.sum())

    def _mask_for(self, indices: torch.Tensor) -> Optional[BudgetMask]:
        if self.fixed_mask is not None:
            return self.fixed_mask
        if not self.spec.method.is_part:
            return None
        return refresh_masks(self.state, indices)

    def _write_outputs(self, metrics: EpochMetrics) -> None:
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(self.out_dir / "metrics.csv", self.state.history)
        epoch_number = metrics["epoch"] + 1
        if epoch_number % self.spec.checkpoint_every == 0:
            save_checkpoint(self.model, self.out_dir / f"model_epoch{epoch_number:03d}.ckpt")
            if self.spec.method.is_part:
                self.state.cache.save(self.out_dir / f"masks_epoch{epoch_number:03d}.npz")


def write_metrics_csv(path: PathLike, history) -> Path:
    path = Path(path)
    with path.open("w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(METRIC_COLUMNS)
        for row in history:
            writer.writerow(
                [row["epoch"]] + [f"{row[column]:.6f}" for column in METRIC_COLUMNS[1:]]
            )
    return path


def train(
    dataset: LabeledImages,
    spec: TrainSpec,
    model: ModelBackend,
    fixed_mask: Optional[BudgetMask] = None,
    on_batch: Optional[BatchObserver] = None,
    out_dir: Optional[PathLike] = None,
) -> TrainState:
    """Train model in place and return the final state.

    Raises:
        NonFiniteError: If a batch loss is NaN or infinite, with the epoch
            and batch index in its details.
    """
    return Trainer(dataset, spec, model, fixed_mask, on_batch, out_dir).run()
