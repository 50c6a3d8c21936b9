"""Forward evaluation and gradients of a model backend."""

from typing import Optional, Tuple

import torch

from ..base.exceptions import NonFiniteError
from .losses import LossFn
from .models import ModelBackend


def forward(model: ModelBackend, batch: torch.Tensor) -> torch.Tensor:
    """Logits of shape N x num_classes.

    Raises:
        ShapeMismatchError: If the batch does not match the architecture.
        NonFiniteError: If any logit is NaN or infinite.
    """
    model.check_input(batch)
    logits = model(batch)
    _require_finite(logits, "logits")
    return logits


def input_gradient(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    reference_logits: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Gradient of the summed per-sample loss with respect to the inputs.

    Summing keeps each sample's gradient equal to the gradient of its own
    loss. Parameter .grad fields are left untouched.
    """
    _, grad = loss_and_input_gradient(model, loss, batch, labels, reference_logits)
    return grad


def loss_and_input_gradient(
    model: ModelBackend,
    loss: LossFn,
    batch: torch.Tensor,
    labels: torch.Tensor,
    reference_logits: Optional[torch.Tensor] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Per-sample loss values and the input gradient, from one forward pass."""
    model.check_input(batch)
    x = batch.detach().clone().requires_grad_(True)
    with torch.enable_grad():
        per_sample = loss(model(x), labels, reference_logits, reduction="none")
        (grad,) = torch.autograd.grad(per_sample.sum(), x)
    _require_finite(grad, "input gradient")
    return per_sample.detach(), grad


def batch_feature_maps_and_grads(
    model: ModelBackend,
    batch: torch.Tensor,
    classes: torch.Tensor,
    layer: Optional[str] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Activations A of the CAM layer and dY_c/dA, both N x K x u x v.

    Samples are independent (no batch statistics), so differentiating the
    sum of each row's class score gives every row its own gradient.
    """
    name = model.resolve_cam_layer(layer)
    model.check_input(batch)
    x = batch.detach()
    with torch.enable_grad():
        logits, features = model.forward_features(x, name)
        scores = logits.gather(1, classes.long().view(-1, 1)).sum()
        (grads,) = torch.autograd.grad(scores, features)
    _require_finite(grads, "feature-map gradient")
    return features.detach(), grads.detach()


def feature_maps_and_grads(
    model: ModelBackend, image: torch.Tensor, class_index: int, layer: Optional[str] = None
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Per-channel maps A_k and dY_c/dA_k for one C x H x W image (K x u x v each)."""
    classes = torch.tensor([class_index])
    maps, grads = batch_feature_maps_and_grads(model, image.unsqueeze(0), classes, layer)
    return maps[0], grads[0]


def _require_finite(values: torch.Tensor, what: str) -> None:
    finite = torch.isfinite(values)
    if not bool(finite.all()):
        coordinate = tuple(int(i) for i in (~finite).nonzero()[0])
        raise NonFiniteError(what, coordinate)
