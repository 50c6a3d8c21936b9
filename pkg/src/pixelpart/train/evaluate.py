"""Natural and robust accuracy of a model under a set of attacks."""

import logging
from typing import Dict, Mapping, Optional

import torch
from pydantic import BaseModel, Field

from ..attack.masks import cam_mask
from ..attack.pgd import run_attack
from ..attack.results import predictions, robust_correct
from ..core.specs import AttackSpec, MaskMode, Scaling
from ..nn.losses import LossFn
from ..nn.models import ModelBackend
from .state import LabeledImages

logger = logging.getLogger(__name__)


class EvaluationResult(BaseModel):
    """Accuracies in [0, 1]; robust accuracy counts an example only when it is
    classified correctly both naturally and after the attack."""

    num_examples: int
    natural_accuracy: float
    robust_accuracy: Dict[str, float] = Field(default_factory=dict)


def evaluate(
    model: ModelBackend,
    dataset: LabeledImages,
    attacks: Optional[Mapping[str, AttackSpec]] = None,
    batch_size: int = 256,
    seed: int = 0,
    cam_method: str = "gradcam",
    cam_layer: Optional[str] = None,
    scaling: Scaling = Scaling.MINMAX,
) -> EvaluationResult:
    """Evaluate every named attack on the whole dataset.

    Attacks with mask_mode=pixel_ag compute their mask from the evaluated
    model's own activation maps for the true labels.
    """
    attacks = dict(attacks or {})
    loss = LossFn()
    n = dataset.images.shape[0]
    natural = 0
    robust = {name: 0 for name in attacks}

    for start in range(0, n, batch_size):
        rows = torch.arange(start, min(start + batch_size, n))
        x = dataset.images[rows]
        labels = dataset.labels[rows].long()
        natural += int((predictions(model, x) == labels).sum())

        for name, spec in attacks.items():
            mask = None
            if spec.mask_mode is MaskMode.PIXEL_AG:
                mask = cam_mask(model, x, labels, spec.eps, spec.eps_low, cam_method, cam_layer, scaling)
            result = run_attack(model, loss, x, labels, spec, mask, seed, rows.tolist())
            robust[name] += int(robust_correct(model, x, result.adversarial, labels).sum())

    evaluation = EvaluationResult(
        num_examples=n,
        natural_accuracy=natural / n,
        robust_accuracy={name: count / n for name, count in robust.items()},
    )
    logger.info("natural=%.4f robust=%s", evaluation.natural_accuracy, evaluation.robust_accuracy)
    return evaluation
