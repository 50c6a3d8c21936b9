"""Attack results and accuracy bookkeeping."""

from dataclasses import dataclass
from typing import Optional

import torch

from ..core.specs import AttackSpec
from ..core.tensors import BudgetMask, Perturbation
from ..nn.backend import forward
from ..nn.models import ModelBackend


@dataclass(frozen=True)
class AttackResult:
    """Output of one attack on a batch.

    Attributes:
        adversarial: N x C x H x W adversarial images in [0, 1]
        perturbation: adversarial - natural
        success: N flags, True where the adversarial image is misclassified
        loss_trajectory: (K + 1) x N per-sample losses at every iterate,
            the last row at the returned images
        mask: Budget mask the attack ran under (None for plain PGD)
        spec: Attack configuration
    """

    adversarial: torch.Tensor
    perturbation: Perturbation
    success: torch.Tensor
    loss_trajectory: torch.Tensor
    mask: Optional[BudgetMask]
    spec: AttackSpec

    def __post_init__(self):
        self.perturbation.check_compatible(self.adversarial)

    @property
    def success_rate(self) -> float:
        return float(self.success.double().mean())

    def budget_violation(self, natural: torch.Tensor) -> float:
        """Largest amount by which any coordinate exceeds eps * m_i (<= 0 when sound)."""
        delta = (self.adversarial - natural).abs()
        bound = torch.full_like(delta, self.spec.eps)
        if self.mask is not None:
            bound = bound * self.mask.multiplier(delta)
        return float((delta - bound).max())


def predictions(model: ModelBackend, batch: torch.Tensor) -> torch.Tensor:
    with torch.no_grad():
        return forward(model, batch).argmax(dim=1)


def robust_correct(
    model: ModelBackend, natural: torch.Tensor, adversarial: torch.Tensor, labels: torch.Tensor
) -> torch.Tensor:
    """Correct both on the natural and on the adversarial image.

    An example the model already misclassifies never counts as robust, even
    when the attack leaves its (wrong) prediction unchanged. This is stricter
    than plain accuracy on the attacked inputs and never exceeds natural
    accuracy.
    """
    labels = labels.long()
    return (predictions(model, natural) == labels) & (predictions(model, adversarial) == labels)
