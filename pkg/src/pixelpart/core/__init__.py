"""Domain types and configuration shared by every other module."""

from .config import build_train_spec, load_config, num_workers, parse_config_text
from .specs import (
    AttackSpec,
    MaskMode,
    Method,
    ProjectionMode,
    Scaling,
    TrainSpec,
    parse_fraction,
    replace_spec,
    validate_spec,
)
from .tensors import BudgetMask, Perturbation

__all__ = [
    "AttackSpec",
    "TrainSpec",
    "MaskMode",
    "Method",
    "ProjectionMode",
    "Scaling",
    "parse_fraction",
    "replace_spec",
    "validate_spec",
    "Perturbation",
    "BudgetMask",
    "build_train_spec",
    "load_config",
    "num_workers",
    "parse_config_text",
]
