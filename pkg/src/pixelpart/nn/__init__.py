"""Differentiable model backends, losses, gradients and checkpoints."""

from .backend import (
    batch_feature_maps_and_grads,
    feature_maps_and_grads,
    forward,
    input_gradient,
    loss_and_input_gradient,
)
from .checkpoint import load_checkpoint, load_model, read_checkpoint, save_checkpoint
from .losses import LossFn, LossKind, kl_per_sample
from .models import (
    ArchitectureSpec,
    LinearBackend,
    ModelBackend,
    OneConvNet,
    ReferenceCNN,
    ScaledBackend,
    build_model,
)

__all__ = [
    "ArchitectureSpec",
    "ModelBackend",
    "ReferenceCNN",
    "OneConvNet",
    "LinearBackend",
    "ScaledBackend",
    "build_model",
    "LossFn",
    "LossKind",
    "kl_per_sample",
    "forward",
    "input_gradient",
    "loss_and_input_gradient",
    "feature_maps_and_grads",
    "batch_feature_maps_and_grads",
    "save_checkpoint",
    "load_checkpoint",
    "load_model",
    "read_checkpoint",
]
