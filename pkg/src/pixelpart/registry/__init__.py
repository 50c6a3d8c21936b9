"""CAM method registry."""

from .cam_registry import CamRegistry, get_cam_method, register_cam_method
from .contracts import CamMethodContract

__all__ = ["CamRegistry", "CamMethodContract", "register_cam_method", "get_cam_method"]
