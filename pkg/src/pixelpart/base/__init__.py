"""Base classes shared by every pixelpart module."""

from .exceptions import (
    CamLayerError,
    CheckpointError,
    DatasetFormatError,
    NonFiniteError,
    PartException,
    ShapeMismatchError,
    SpecValidationError,
)
from .loggable import ContextAdapter, Loggable, configure_logging
from .metadata import CamMethodMetadata

__all__ = [
    "PartException",
    "SpecValidationError",
    "ShapeMismatchError",
    "NonFiniteError",
    "CamLayerError",
    "CheckpointError",
    "DatasetFormatError",
    "Loggable",
    "ContextAdapter",
    "configure_logging",
    "CamMethodMetadata",
]
