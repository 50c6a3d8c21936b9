"""Immutable value objects over torch tensors.

Pixel arrays are channels-first (C x H x W, batches N x C x H x W) so they
feed torch layers directly. Budget masks are spatial (H x W, or N x H x W
for a batch) and broadcast across channels.
"""

from dataclasses import dataclass
from typing import Literal, Sequence

import torch

from ..base.exceptions import ShapeMismatchError, SpecValidationError

MaskSource = Literal["cam", "regional"]
Region = Literal["high", "low"]


@dataclass(frozen=True)
class Perturbation:
    """Signed perturbation, same shape as the image or batch it perturbs."""

    delta: torch.Tensor

    def check_compatible(self, pixels: torch.Tensor) -> None:
        if self.delta.shape != pixels.shape:
            raise ShapeMismatchError("perturbation", pixels.shape, self.delta.shape)

    def linf(self) -> torch.Tensor:
        """Per-sample l-infinity norm (leading dimension is the batch)."""
        return self.delta.abs().flatten(start_dim=1).amax(dim=1)


@dataclass(frozen=True)
class BudgetMask:
    """Per-pixel budget multipliers.

    For CAM-derived masks every entry is exactly 1 (important pixel) or
    eps_low / eps (the rest). Regional masks (quadrant budgets) may hold any
    multiplier in (0, 1]; eps_low then records the smallest regional budget.

    Attributes:
        m: H x W or N x H x W multipliers
        eps: Budget of important pixels
        eps_low: Budget of the remaining pixels
        source: "cam" or "regional"
    """

    m: torch.Tensor
    eps: float
    eps_low: float
    source: MaskSource = "cam"

    def __post_init__(self):
        if not (self.eps > 0 and self.eps_low > 0):
            raise SpecValidationError("budgets must be positive")
        if self.eps_low > self.eps:
            raise SpecValidationError("eps_low > eps")
        if self.m.dim() not in (2, 3):
            raise ShapeMismatchError("budget mask", ("[N]", "H", "W"), tuple(self.m.shape))
        if self.source == "cam":
            allowed = (self.m == 1) | (self.m == self.ratio)
            if not bool(allowed.all()):
                raise SpecValidationError("mask entries must be 1 or eps_low/eps")
        elif self.m.numel() and (self.m.min() <= 0 or self.m.max() > 1):
            raise SpecValidationError("regional multipliers must lie in (0, 1]")

    @classmethod
    def all_ones(
        cls, shape: Sequence[int], eps: float, eps_low: float | None = None,
        dtype: torch.dtype = torch.float32,
    ) -> "BudgetMask":
        return cls(torch.ones(tuple(shape), dtype=dtype), eps, eps if eps_low is None else eps_low)

    @property
    def ratio(self) -> float:
        return self.eps_low / self.eps

    @property
    def spatial_shape(self) -> torch.Size:
        return self.m.shape[-2:]

    @property
    def is_all_ones(self) -> bool:
        return bool((self.m == 1).all())

    @property
    def high(self) -> torch.Tensor:
        """Boolean map of I_high."""
        return self.m == 1

    @property
    def low(self) -> torch.Tensor:
        """Boolean map of I_low."""
        return ~self.high

    @property
    def d_high(self) -> int:
        return int(self.high.sum())

    @property
    def d_low(self) -> int:
        return int(self.low.sum())

    def multiplier(self, like: torch.Tensor) -> torch.Tensor:
        """Multipliers shaped to broadcast against an N x C x H x W batch."""
        if tuple(self.spatial_shape) != tuple(like.shape[-2:]):
            raise ShapeMismatchError("budget mask", like.shape[-2:], self.spatial_shape)
        m = self.m if self.m.dim() == 3 else self.m.unsqueeze(0)
        if m.shape[0] not in (1, like.shape[0]):
            raise ShapeMismatchError("budget mask batch", (like.shape[0],), (m.shape[0],))
        return m.unsqueeze(1).to(dtype=like.dtype, device=like.device)

    def gather(self, delta: torch.Tensor, region: Region) -> torch.Tensor:
        """Coordinates of delta that fall in I_high or I_low, flattened."""
        self.multiplier(delta)
        selector = self.high if region == "high" else self.low
        if selector.dim() == 2:
            selector = selector.unsqueeze(0)
        selector = selector.unsqueeze(1).to(delta.device)
        return delta[selector.expand_as(delta)]
