"""Per-sample losses the attacks differentiate through."""

from dataclasses import dataclass
from enum import Enum
from typing import Literal, Optional

import torch
import torch.nn.functional as F

PROB_FLOOR = 1e-12

Reduction = Literal["none", "mean", "sum"]


class LossKind(str, Enum):
    CROSS_ENTROPY = "cross_entropy"
    KL_DIVERGENCE = "kl_divergence"
    SQUARE = "square"


@dataclass(frozen=True)
class LossFn:
    """A loss on logits, differentiable with respect to them.

    kl_divergence is KL(softmax(reference) || softmax(logits)) and needs the
    reference (natural) logits. square is (y - f(x))^2 for single-output
    models and the squared distance to the one-hot target otherwise.
    """

    kind: LossKind = LossKind.CROSS_ENTROPY

    @property
    def needs_reference(self) -> bool:
        return self.kind is LossKind.KL_DIVERGENCE

    def __call__(
        self,
        logits: torch.Tensor,
        labels: torch.Tensor,
        reference_logits: Optional[torch.Tensor] = None,
        reduction: Reduction = "mean",
    ) -> torch.Tensor:
        if self.kind is LossKind.CROSS_ENTROPY:
            per_sample = F.cross_entropy(logits, labels.long(), reduction="none")
        elif self.kind is LossKind.KL_DIVERGENCE:
            if reference_logits is None:
                raise ValueError("kl_divergence needs reference logits")
            per_sample = kl_per_sample(reference_logits, logits)
        else:
            per_sample = _square(logits, labels)
        return _reduce(per_sample, reduction)


def kl_per_sample(reference_logits: torch.Tensor, logits: torch.Tensor) -> torch.Tensor:
    """KL(softmax(reference) || softmax(logits)) per row, probabilities floored."""
    p_ref = F.softmax(reference_logits, dim=1).clamp_min(PROB_FLOOR)
    p = F.softmax(logits, dim=1).clamp_min(PROB_FLOOR)
    return (p_ref * (p_ref.log() - p.log())).sum(dim=1)


def _square(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    if logits.shape[1] == 1:
        return (labels.to(logits.dtype) - logits[:, 0]) ** 2
    target = F.one_hot(labels.long(), logits.shape[1]).to(logits.dtype)
    return ((target - logits) ** 2).sum(dim=1)


def _reduce(per_sample: torch.Tensor, reduction: Reduction) -> torch.Tensor:
    if reduction == "none":
        return per_sample
    if reduction == "sum":
        return per_sample.sum()
    return per_sample.mean()
