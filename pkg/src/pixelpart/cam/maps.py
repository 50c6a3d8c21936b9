"""Activation map value object."""

from dataclasses import dataclass, replace
from typing import Optional

import torch


@dataclass(frozen=True)
class ActivationMap:
    """The stages of a class activation map for a batch of images.

    Attributes:
        raw: N x u x v non-negative map L_c read from the CAM layer
        class_index: N target classes
        resized: N x H x W map L'_c at input resolution
        scaled: N x H x W pixel weights omega
        degenerate: N flags; a degenerate map carries no spatial information
            and yields an all-ones budget mask
    """

    raw: torch.Tensor
    class_index: torch.Tensor
    resized: Optional[torch.Tensor] = None
    scaled: Optional[torch.Tensor] = None
    degenerate: Optional[torch.Tensor] = None

    def __post_init__(self):
        if self.degenerate is None:
            flat = self.raw.flatten(start_dim=1)
            object.__setattr__(self, "degenerate", (flat == 0).all(dim=1))

    def __len__(self) -> int:
        return self.raw.shape[0]

    def with_stages(self, **stages) -> "ActivationMap":
        return replace(self, **stages)
