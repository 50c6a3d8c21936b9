"""Adaptive attack against CAM-reweighted defenses.

The attacker knows the defense: it recomputes the budget mask on the
defended model's own activation maps and runs Pixel-AG with inflated
budgets (eps_low = 8/255, eps = 12/255 by default).
"""

from typing import Optional, Sequence, Union

import torch

from ..core.specs import DEFAULT_ALPHA, EVAL_ITERATIONS, AttackSpec, MaskMode, Scaling
from ..nn.losses import LossFn
from ..nn.models import ModelBackend
from .masks import cam_mask
from .pgd import pixel_ag
from .results import AttackResult

ADAPTIVE_EPS = 12 / 255
ADAPTIVE_EPS_LOW = 8 / 255


def adaptive_spec(
    eps: float = ADAPTIVE_EPS,
    eps_low: float = ADAPTIVE_EPS_LOW,
    iterations: int = EVAL_ITERATIONS,
    alpha: float = DEFAULT_ALPHA,
) -> AttackSpec:
    return AttackSpec(
        eps=eps,
        eps_low=eps_low,
        alpha=alpha,
        iterations=iterations,
        random_start=True,
        mask_mode=MaskMode.PIXEL_AG,
    )


def adaptive_pgd(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    eps_low: float = ADAPTIVE_EPS_LOW,
    eps: float = ADAPTIVE_EPS,
    iterations: int = EVAL_ITERATIONS,
    alpha: float = DEFAULT_ALPHA,
    cam_method: str = "gradcam",
    cam_layer: Optional[str] = None,
    scaling: Union[Scaling, str] = Scaling.MINMAX,
    seed: int = 0,
    indices: Optional[Sequence[int]] = None,
) -> AttackResult:
    """Pixel-AG with an attacker-side mask computed for the true labels."""
    spec = adaptive_spec(eps, eps_low, iterations, alpha)
    mask = cam_mask(model, batch, labels, eps, eps_low, cam_method, cam_layer, scaling)
    return pixel_ag(model, loss, batch, labels, spec, mask, seed, indices)
