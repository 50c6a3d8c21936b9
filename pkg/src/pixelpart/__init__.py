__version__ = "0.3.0"

from .base import (
    CamLayerError,
    CamMethodMetadata,
    CheckpointError,
    DatasetFormatError,
    Loggable,
    NonFiniteError,
    PartException,
    ShapeMismatchError,
    SpecValidationError,
)
from .core import (
    AttackSpec,
    BudgetMask,
    MaskMode,
    Method,
    Perturbation,
    ProjectionMode,
    Scaling,
    TrainSpec,
    load_config,
    validate_spec,
)
from .nn import ArchitectureSpec, LossFn, LossKind, ModelBackend, build_model
from .cam import ActivationMap, BaseCamMethod, compute_weight_field, gradcam, layercam, xgradcam
from .registry import CamRegistry, register_cam_method
from .utils import validate_model_backend
from .attack import AttackResult, adaptive_pgd, generate_mask, pgd, pixel_ag, sanity_suite
from .train import TrainState, evaluate, train
from .theory import ToyInstance, enumerate_kkt, grid_oracle, solve_toy_attack, unequal_budget_effect
from .bench import Dataset, RegionalBudget, quadrant_mask, synth_dataset

__all__ = [
    "__version__",
    "PartException",
    "SpecValidationError",
    "ShapeMismatchError",
    "NonFiniteError",
    "CamLayerError",
    "CheckpointError",
    "DatasetFormatError",
    "Loggable",
    "CamMethodMetadata",
    "AttackSpec",
    "TrainSpec",
    "MaskMode",
    "Method",
    "ProjectionMode",
    "Scaling",
    "Perturbation",
    "BudgetMask",
    "load_config",
    "validate_spec",
    "ArchitectureSpec",
    "ModelBackend",
    "LossFn",
    "LossKind",
    "build_model",
    "ActivationMap",
    "BaseCamMethod",
    "gradcam",
    "xgradcam",
    "layercam",
    "compute_weight_field",
    "CamRegistry",
    "register_cam_method",
    "validate_model_backend",
    "AttackResult",
    "generate_mask",
    "pgd",
    "pixel_ag",
    "adaptive_pgd",
    "sanity_suite",
    "TrainState",
    "train",
    "evaluate",
    "ToyInstance",
    "enumerate_kkt",
    "solve_toy_attack",
    "grid_oracle",
    "unequal_budget_effect",
    "Dataset",
    "RegionalBudget",
    "quadrant_mask",
    "synth_dataset",
]
