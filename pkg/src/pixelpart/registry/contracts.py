"""Contract wrapper around a registered CAM method class."""

from typing import Optional, Type

from ..base import CamMethodMetadata
from ..cam.methods import BaseCamMethod


class CamMethodContract:
    """Standardized view of a CAM method class.

    Attributes:
        method_class: The wrapped BaseCamMethod subclass
        metadata: Cached metadata from the class
    """

    def __init__(self, method_class: Type[BaseCamMethod]):
        if not issubclass(method_class, BaseCamMethod):
            raise TypeError(f"{method_class.__name__} must inherit from BaseCamMethod")

        self.method_class = method_class
        self._metadata: Optional[CamMethodMetadata] = None

    @property
    def metadata(self) -> CamMethodMetadata:
        if self._metadata is None:
            self._metadata = self.method_class.get_metadata()
        return self._metadata

    @property
    def name(self) -> str:
        return self.metadata.name

    @property
    def version(self) -> str:
        return self.metadata.version

    @property
    def description(self) -> str:
        return self.metadata.description

    def create(self) -> BaseCamMethod:
        return self.method_class()

    def __repr__(self) -> str:
        return f"CamMethodContract(name='{self.name}', version='{self.version}')"
