"""Exception hierarchy for pixelpart.

PartException is an abstract base class. All domain-specific exceptions
must inherit from it and implement error_category. The CLI maps the
"validation" category to exit code 1 and every other category to 2.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence


class PartException(ABC, Exception):
    """Abstract base exception for all pixelpart errors.

    Do not raise PartException directly. Use specific subclasses
    (SpecValidationError, NonFiniteError, etc.) instead.
    """

    @property
    @abstractmethod
    def error_category(self) -> str:
        """Category of the error for grouping and exit-code mapping."""
        ...

    def __init__(
        self,
        message: str,
        code: str = "INTERNAL_ERROR",
        field: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        """Initialize pixelpart exception.

        Args:
            message: Human-readable error message
            code: Error code for programmatic handling
            field: Name of the violated invariant or offending field
            details: Additional error context
        """
        self.message = message
        self.code = code
        self.field = field
        self.details = details or {}
        super().__init__(message)


class SpecValidationError(PartException):
    """A configuration value violates one of its invariants."""

    error_category = "validation"

    def __init__(self, invariant: str, message: Optional[str] = None, **details: Any):
        super().__init__(
            message or invariant,
            code="SPEC_INVALID",
            field=invariant,
            details=details,
        )


class ShapeMismatchError(PartException):
    """Two arrays that must agree in shape do not."""

    error_category = "validation"

    def __init__(self, what: str, expected: Sequence[int], actual: Sequence[int]):
        super().__init__(
            f"{what}: expected shape {tuple(expected)}, got {tuple(actual)}",
            code="SHAPE_MISMATCH",
            field=what,
            details={"expected": tuple(expected), "actual": tuple(actual)},
        )


class NonFiniteError(PartException):
    """A gradient or loss value is NaN or infinite."""

    error_category = "numerical"

    def __init__(self, what: str, coordinate: Optional[Sequence[int]] = None, **context: Any):
        location = f" at coordinate {tuple(coordinate)}" if coordinate is not None else ""
        where = ", ".join(f"{key}={value}" for key, value in context.items())
        suffix = f" ({where})" if where else ""
        super().__init__(
            f"non-finite {what}{location}{suffix}",
            code="NON_FINITE",
            field=what,
            details={"coordinate": coordinate, **context},
        )


class CamLayerError(PartException):
    """The model has no layer a class activation map can read."""

    error_category = "model"

    def __init__(self, message: str, layer: Optional[str] = None):
        super().__init__(message, code="NO_CAM_LAYER", field=layer)


class CheckpointError(PartException):
    """A checkpoint file cannot be read back into the given model."""

    error_category = "io"

    def __init__(self, message: str, path: Optional[str] = None, **details: Any):
        super().__init__(message, code="BAD_CHECKPOINT", field=path, details=details)


class DatasetFormatError(PartException):
    """A dataset file does not follow the expected binary layout."""

    error_category = "io"

    def __init__(self, message: str, path: Optional[str] = None, **details: Any):
        super().__init__(message, code="BAD_DATASET", field=path, details=details)
