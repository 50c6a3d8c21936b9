"""Resize raw maps to input resolution and scale them into pixel weights."""

from typing import Literal, Optional, Sequence, Tuple, Union

import torch
import torch.nn.functional as F

from ..core.specs import Scaling
from ..nn.models import ModelBackend
from .maps import ActivationMap

ResizeMode = Literal["bilinear", "nearest"]


def resize_map(
    raw: torch.Tensor, target: Sequence[int], mode: ResizeMode = "bilinear"
) -> torch.Tensor:
    """Interpolate u x v (or N x u x v) maps to H x W, corners not aligned."""
    height, width = target
    batch = raw.unsqueeze(0) if raw.dim() == 2 else raw
    kwargs = {"align_corners": False} if mode == "bilinear" else {}
    resized = F.interpolate(batch.unsqueeze(1), size=(height, width), mode=mode, **kwargs)
    resized = resized.squeeze(1).clamp_min(0)
    return resized[0] if raw.dim() == 2 else resized


def scale_map(
    resized: torch.Tensor, scaling: Union[Scaling, str] = Scaling.MINMAX
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Pixel weights omega and a per-map degenerate flag.

    minmax: omega = 2 (L' - min) / (max - min), so omega lies in [0, 2] and
    omega > 1 exactly above the midrange. mean: omega = L' / mean(L'), so
    omega > 1 above the mean. Constant maps are degenerate and get omega = 1
    everywhere, which the mask rule turns into an all-ones mask.
    """
    batch = resized.unsqueeze(0) if resized.dim() == 2 else resized
    flat = batch.flatten(start_dim=1)
    low = flat.amin(dim=1).view(-1, 1, 1)
    high = flat.amax(dim=1).view(-1, 1, 1)
    degenerate = (high == low).view(-1)

    if Scaling(scaling) is Scaling.MINMAX:
        span = torch.where(high > low, high - low, torch.ones_like(high))
        omega = 2 * (batch - low) / span
    else:
        mean = flat.mean(dim=1).view(-1, 1, 1)
        degenerate = degenerate | (mean.view(-1) == 0)
        omega = batch / torch.where(mean > 0, mean, torch.ones_like(mean))

    omega = torch.where(degenerate.view(-1, 1, 1), torch.ones_like(omega), omega)
    if resized.dim() == 2:
        return omega[0], degenerate[0]
    return omega, degenerate


def compute_weight_field(
    model: ModelBackend,
    batch: torch.Tensor,
    classes: torch.Tensor,
    method: str = "gradcam",
    layer: Optional[str] = None,
    scaling: Union[Scaling, str] = Scaling.MINMAX,
    resize_mode: ResizeMode = "bilinear",
) -> ActivationMap:
    """Raw map, resized map and pixel weights for a batch, in one pass."""
    from ..registry.cam_registry import get_cam_method

    cam = get_cam_method(method)(model, batch, classes, layer)
    resized = resize_map(cam.raw, batch.shape[-2:], resize_mode)
    omega, flat = scale_map(resized, scaling)
    return cam.with_stages(resized=resized, scaled=omega, degenerate=cam.degenerate | flat)
