"""Projected gradient ascent under (optionally reweighted) l-infinity boxes.

Every iterate is projected about the natural image x:

    none              x' = clamp(x + clip(x~ + a sign(g) - x, -eps, eps))
    per_step_multiply x' = clamp(x + m * clip(x~ + a sign(g) - x, -eps, eps))
    box_project       x' = clamp(x + clip(x~ + a sign(g) - x, -eps m, eps m))

with sign(0) = 0 and clamp to [0, 1]. Random starts draw U(-eps, eps) per
coordinate from a stream derived from (seed, image index), so results do
not depend on how a dataset is split into batches.
"""

import logging
from typing import Optional, Sequence

import numpy as np
import torch

from ..core.specs import AttackSpec, MaskMode, ProjectionMode
from ..core.tensors import BudgetMask, Perturbation
from ..nn.backend import forward, loss_and_input_gradient
from ..nn.losses import LossFn
from ..nn.models import ModelBackend
from .results import AttackResult

logger = logging.getLogger(__name__)


def image_generator(seed: int, index: int) -> torch.Generator:
    """Random stream owned by one image of one attack run."""
    state = np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint32)[0]
    return torch.Generator().manual_seed(int(state))


def random_start_noise(
    like: torch.Tensor, eps: float, seed: int, indices: Sequence[int]
) -> torch.Tensor:
    """U(-eps, eps) noise, one independent draw per image."""
    noise = torch.empty(like.shape, dtype=like.dtype)
    for row, index in enumerate(indices):
        generator = image_generator(seed, int(index))
        draw = torch.rand(like.shape[1:], generator=generator, dtype=torch.float64)
        noise[row] = ((2 * draw - 1) * eps).to(like.dtype)
    return noise.to(like.device)


def pgd(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    spec: AttackSpec,
    seed: int = 0,
    indices: Optional[Sequence[int]] = None,
) -> AttackResult:
    """Plain PGD-K inside the eps box; the spec's mask settings are ignored."""
    return _run(model, loss, batch, labels, spec, None, seed, indices)


def pixel_ag(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    spec: AttackSpec,
    mask: BudgetMask,
    seed: int = 0,
    indices: Optional[Sequence[int]] = None,
) -> AttackResult:
    """PGD whose box is reweighted per pixel by mask.

    Raises:
        ShapeMismatchError: If the mask does not match the batch.
    """
    mask.multiplier(batch)
    return _run(model, loss, batch, labels, spec, mask, seed, indices)


def run_attack(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    spec: AttackSpec,
    mask: Optional[BudgetMask] = None,
    seed: int = 0,
    indices: Optional[Sequence[int]] = None,
) -> AttackResult:
    """Dispatch on spec.mask_mode."""
    if spec.mask_mode is MaskMode.PIXEL_AG:
        if mask is None:
            raise ValueError("mask_mode=pixel_ag needs a budget mask")
        return pixel_ag(model, loss, batch, labels, spec, mask, seed, indices)
    return pgd(model, loss, batch, labels, spec, seed, indices)


def _run(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    spec: AttackSpec,
    mask: Optional[BudgetMask],
    seed: int,
    indices: Optional[Sequence[int]],
) -> AttackResult:
    x = batch.detach()
    labels = labels.long()
    if indices is None:
        indices = range(x.shape[0])
    m = mask.multiplier(x) if mask is not None else None

    reference = None
    if loss.needs_reference:
        with torch.no_grad():
            reference = forward(model, x).detach()

    x_adv = x.clone()
    if spec.random_start:
        noise = random_start_noise(x, spec.eps, seed, indices)
        if m is not None:
            noise = m * noise
        x_adv = (x + noise).clamp(0, 1)

    trajectory = []
    for _ in range(spec.iterations):
        values, grad = loss_and_input_gradient(model, loss, x_adv, labels, reference)
        trajectory.append(values)
        step = x_adv + spec.alpha * grad.sign() - x
        delta = _project(step, spec, m)
        x_adv = (x + delta).clamp(0, 1).detach()

    with torch.no_grad():
        final_logits = forward(model, x_adv)
        trajectory.append(loss(final_logits, labels, reference, reduction="none").detach())
    success = final_logits.argmax(dim=1) != labels

    logger.debug(
        "%s K=%d eps=%.5f: %d/%d successful",
        "pixel_ag" if mask is not None else "pgd",
        spec.iterations,
        spec.eps,
        int(success.sum()),
        x.shape[0],
    )
    return AttackResult(
        adversarial=x_adv,
        perturbation=Perturbation(x_adv - x),
        success=success,
        loss_trajectory=torch.stack(trajectory),
        mask=mask,
        spec=spec,
    )


def _project(step: torch.Tensor, spec: AttackSpec, m: Optional[torch.Tensor]) -> torch.Tensor:
    if m is None:
        return step.clamp(-spec.eps, spec.eps)
    if spec.projection_mode is ProjectionMode.BOX_PROJECT:
        bound = spec.eps * m
        return torch.maximum(torch.minimum(step, bound), -bound)
    return m * step.clamp(-spec.eps, spec.eps)


