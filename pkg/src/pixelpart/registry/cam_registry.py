"""Global CAM method registry singleton.

Methods are keyed by their metadata name ("gradcam", "xgradcam",
"layercam", ...), which is what configs and the CLI refer to.
"""

import threading
from typing import Dict, List, Optional, Tuple, Type

from packaging import version as pkg_version

from ..base.exceptions import SpecValidationError
from ..cam.methods import BaseCamMethod, GradCam, LayerCam, XGradCam
from .contracts import CamMethodContract

BUILTIN_METHODS: Tuple[Type[BaseCamMethod], ...] = (GradCam, XGradCam, LayerCam)


class CamRegistry:
    """Singleton registry of CAM methods, created with the built-ins loaded.

    A name registered twice keeps the higher version unless override is set.
    Thread-safe for concurrent registrations.
    """

    _instance: Optional["CamRegistry"] = None
    _lock = threading.Lock()

    def __init__(self):
        self._methods: Dict[str, CamMethodContract] = {}
        self._registry_lock = threading.Lock()
        for method_class in BUILTIN_METHODS:
            self.register(method_class)

    @classmethod
    def instance(cls) -> "CamRegistry":
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = cls()
        return cls._instance

    def register(
        self, method_class: Type[BaseCamMethod], override: bool = False
    ) -> CamMethodContract:
        """Register a CAM method class and return the contract now in effect.

        Raises:
            TypeError: If method_class is not a BaseCamMethod subclass
        """
        contract = CamMethodContract(method_class)
        with self._registry_lock:
            current = self._methods.get(contract.name)
            if current is None or override or _newer_or_same(contract, current):
                self._methods[contract.name] = contract
            return self._methods[contract.name]

    def get_method(self, name: str) -> Optional[CamMethodContract]:
        with self._registry_lock:
            return self._methods.get(name)

    def names(self) -> List[str]:
        with self._registry_lock:
            return sorted(self._methods)

    def __repr__(self) -> str:
        return f"CamRegistry(methods={self.names()})"


def _newer_or_same(new: CamMethodContract, existing: CamMethodContract) -> bool:
    try:
        return pkg_version.parse(new.version) >= pkg_version.parse(existing.version)
    except pkg_version.InvalidVersion:
        return True


def register_cam_method(
    method_class: Type[BaseCamMethod], override: bool = False
) -> CamMethodContract:
    """Register a CAM method with the global registry.

    Example:
        class EigenCam(BaseCamMethod):
            @staticmethod
            def get_metadata():
                return CamMethodMetadata(name="eigencam", description="...")

            def pixel_weights(self, maps, grads):
                ...

        register_cam_method(EigenCam)
    """
    return CamRegistry.instance().register(method_class, override)


def get_cam_method(name: str) -> BaseCamMethod:
    """Instantiate a registered method by name.

    Raises:
        SpecValidationError: If no method is registered under the name
    """
    registry = CamRegistry.instance()
    contract = registry.get_method(name)
    if contract is None:
        known = ", ".join(registry.names())
        raise SpecValidationError(
            "cam_method", f"unknown CAM method {name!r} (registered: {known})", name=name
        )
    return contract.create()
