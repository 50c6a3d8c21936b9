"""Budget masks from pixel-weight fields."""

from typing import Optional, Union

import torch

from ..cam.processing import compute_weight_field
from ..core.specs import Scaling
from ..core.tensors import BudgetMask
from ..nn.models import ModelBackend


def generate_mask(
    omega: torch.Tensor,
    eps: float,
    eps_low: float,
    degenerate: Union[bool, torch.Tensor, None] = None,
) -> BudgetMask:
    """m_i = 1 where omega_i > 1, eps_low / eps elsewhere.

    omega is H x W or N x H x W. A degenerate map (per image when batched)
    yields all ones. Ties at omega_i = 1 count as unimportant.
    """
    ratio = eps_low / eps
    ones = torch.ones_like(omega)
    m = torch.where(omega > 1, ones, torch.full_like(omega, ratio))
    if degenerate is not None:
        flags = torch.as_tensor(degenerate, dtype=torch.bool, device=omega.device)
        if omega.dim() == 3:
            flags = flags.reshape(-1, 1, 1)
        m = torch.where(flags, ones, m)
    return BudgetMask(m, eps, eps_low)


def cam_mask(
    model: ModelBackend,
    batch: torch.Tensor,
    labels: torch.Tensor,
    eps: float,
    eps_low: float,
    method: str = "gradcam",
    layer: Optional[str] = None,
    scaling: Union[Scaling, str] = Scaling.MINMAX,
) -> BudgetMask:
    """Batched mask from the model's own activation maps for the given classes."""
    cam = compute_weight_field(model, batch, labels, method, layer, scaling)
    return generate_mask(cam.scaled, eps, eps_low, cam.degenerate)
