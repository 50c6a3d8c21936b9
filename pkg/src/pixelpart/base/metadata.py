"""CAM method metadata definitions.

This module defines the CamMethodMetadata dataclass that describes a class
activation mapping method registered with the CAM registry.
"""

from dataclasses import dataclass

MIN_VERSION_PARTS = 2
MAX_VERSION_PARTS = 3


@dataclass(frozen=True)
class CamMethodMetadata:
    """Metadata describing a CAM method.

    Attributes:
        name: Registry key used by configs and the CLI (e.g. "gradcam")
        description: Human-readable description of the channel weighting
        version: Semantic version string; on a duplicate name the registry
            keeps the higher version

    Example:
        metadata = CamMethodMetadata(
            name="gradcam",
            description="Spatially averaged gradients weight each channel",
            version="1.0.0",
        )
    """

    name: str
    description: str
    version: str = "1.0.0"

    def __post_init__(self):
        self._validate_required_fields()
        self._validate_version_format()

    def _validate_required_fields(self) -> None:
        if not self.name:
            raise ValueError("CAM method name cannot be empty")
        if not self.description:
            raise ValueError("CAM method description cannot be empty")

    def _validate_version_format(self) -> None:
        version_parts = self.version.split(".")
        is_valid_format = MIN_VERSION_PARTS <= len(version_parts) <= MAX_VERSION_PARTS

        if not is_valid_format:
            raise ValueError(
                f"Invalid version format: {self.version}. "
                "Expected format: MAJOR.MINOR or MAJOR.MINOR.PATCH"
            )
