"""Model backend validation utilities.

Shallow structural checks that collect every problem instead of stopping at
the first one, for reporting before a long training or attack run.
"""

from typing import List, Optional, Tuple

import torch

from ..base.exceptions import SpecValidationError
from ..nn.models import ArchitectureSpec, ModelBackend


def validate_model_backend(
    model: object, require_cam_layer: bool = True
) -> Tuple[bool, List[str]]:
    """Perform shallow validation of a model backend.

    Checks:
    - Is it a ModelBackend instance?
    - Does its architecture descriptor round-trip?
    - Are all parameters finite?
    - Does the declared CAM layer exist (when required)?

    Returns:
        Tuple of (is_valid, error_messages)

    Example:
        is_valid, errors = validate_model_backend(model)
        if not is_valid:
            print("Validation errors:", errors)
    """
    errors: List[str] = []

    base_class_error = _validate_backend_instance(model)
    if base_class_error:
        errors.append(base_class_error)
        return False, errors

    errors.extend(_validate_descriptor(model))
    errors.extend(_validate_parameters(model))
    if require_cam_layer:
        errors.extend(_validate_cam_layer(model))

    return len(errors) == 0, errors


def _validate_backend_instance(model: object) -> Optional[str]:
    if not isinstance(model, ModelBackend):
        return f"{type(model).__name__} must inherit from ModelBackend"
    return None


def _validate_descriptor(model: ModelBackend) -> List[str]:
    descriptor = model.descriptor
    if not descriptor:
        return ["Architecture descriptor is empty"]
    try:
        ArchitectureSpec.from_descriptor(descriptor)
    except ValueError as exc:
        return [f"Architecture descriptor does not parse: {exc}"]
    return []


def _validate_parameters(model: ModelBackend) -> List[str]:
    errors = []
    for name, parameter in model.named_parameters():
        if not bool(torch.isfinite(parameter).all()):
            errors.append(f"Parameter '{name}' has non-finite values")
    return errors


def _validate_cam_layer(model: ModelBackend) -> List[str]:
    layer = model.architecture.cam_layer
    if not model.cam_layers:
        return [f"{type(model).__name__} exposes no CAM layer"]
    if layer not in model.cam_layers:
        return [
            f"Declared CAM layer '{layer}' not among {', '.join(model.cam_layers)}"
        ]
    return []


def ensure_valid_model_backend(model: ModelBackend, require_cam_layer: bool = True) -> ModelBackend:
    """Return model unchanged, or raise with every problem validate_model_backend found.

    Raises:
        SpecValidationError: With the collected messages in details["errors"]
    """
    is_valid, errors = validate_model_backend(model, require_cam_layer)
    if not is_valid:
        raise SpecValidationError("model backend", "; ".join(errors), errors=errors)
    return model
