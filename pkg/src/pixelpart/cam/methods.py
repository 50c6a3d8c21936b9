"""Gradient-weighted class activation mapping methods.

Each method turns the CAM-layer activations A (N x K x u x v) and the class
score gradients dY_c/dA into a raw map ReLU(sum_k W_k * A_k), where W is a
per-position weight the method defines.
"""

from abc import ABC, abstractmethod
from typing import Optional, Union

import torch
import torch.nn.functional as F

from ..base.loggable import Loggable
from ..base.metadata import CamMethodMetadata
from ..nn.backend import batch_feature_maps_and_grads
from ..nn.models import ModelBackend
from .maps import ActivationMap

XGRADCAM_TAU = 1e-8

ClassIndex = Union[int, torch.Tensor]


class BaseCamMethod(ABC, Loggable):
    """Abstract base class for CAM methods.

    Required Methods:
        - get_metadata(): Return CamMethodMetadata (name, description, version)
        - pixel_weights(maps, grads): Return the weight W multiplying each A_k
    """

    @staticmethod
    @abstractmethod
    def get_metadata() -> CamMethodMetadata:
        """Return CamMethodMetadata describing the method."""
        ...

    @abstractmethod
    def pixel_weights(self, maps: torch.Tensor, grads: torch.Tensor) -> torch.Tensor:
        """Weights broadcastable against maps (N x K x u x v)."""
        ...

    def log_context(self):
        return {"cam": self.get_metadata().name}

    def combine(self, maps: torch.Tensor, grads: torch.Tensor) -> torch.Tensor:
        return F.relu((self.pixel_weights(maps, grads) * maps).sum(dim=1))

    def __call__(
        self,
        model: ModelBackend,
        images: torch.Tensor,
        classes: ClassIndex,
        layer: Optional[str] = None,
    ) -> ActivationMap:
        """Raw activation maps for one image (C x H x W) or a batch."""
        batch = images.unsqueeze(0) if images.dim() == 3 else images
        targets = torch.as_tensor(classes).long().reshape(-1)
        if targets.numel() == 1 and batch.shape[0] > 1:
            targets = targets.expand(batch.shape[0])

        maps, grads = batch_feature_maps_and_grads(model, batch, targets, layer)
        raw = self.combine(maps, grads)
        cam = ActivationMap(raw=raw, class_index=targets)
        if bool(cam.degenerate.any()):
            self.logger.debug(
                "%d of %d maps are all zero",
                int(cam.degenerate.sum()),
                len(cam),
            )
        return cam

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.get_metadata().name}')"


class GradCam(BaseCamMethod):
    """alpha_k = (1/Z) sum_ij dY_c/dA_k,ij with Z = u * v."""

    @staticmethod
    def get_metadata() -> CamMethodMetadata:
        return CamMethodMetadata(
            name="gradcam",
            description="Channel weights are spatially averaged class-score gradients",
        )

    def pixel_weights(self, maps, grads):
        return grads.mean(dim=(2, 3), keepdim=True)


class XGradCam(BaseCamMethod):
    """alpha_k = sum_ij A_k,ij / (sum_ij A_k,ij + tau) * dY_c/dA_k,ij."""

    def __init__(self, tau: float = XGRADCAM_TAU):
        self.tau = tau

    @staticmethod
    def get_metadata() -> CamMethodMetadata:
        return CamMethodMetadata(
            name="xgradcam",
            description="Channel weights are activation-normalized gradient sums",
        )

    def pixel_weights(self, maps, grads):
        totals = maps.sum(dim=(2, 3), keepdim=True)
        return (maps / (totals + self.tau) * grads).sum(dim=(2, 3), keepdim=True)


class LayerCam(BaseCamMethod):
    """Element-wise weights ReLU(dY_c/dA_k); works at any conv layer."""

    @staticmethod
    def get_metadata() -> CamMethodMetadata:
        return CamMethodMetadata(
            name="layercam",
            description="Positive gradients weight each activation element-wise",
        )

    def pixel_weights(self, maps, grads):
        return F.relu(grads)


def gradcam(model: ModelBackend, image: torch.Tensor, class_index: ClassIndex,
            layer: Optional[str] = None) -> ActivationMap:
    return GradCam()(model, image, class_index, layer)


def xgradcam(model: ModelBackend, image: torch.Tensor, class_index: ClassIndex,
             layer: Optional[str] = None) -> ActivationMap:
    return XGradCam()(model, image, class_index, layer)


def layercam(model: ModelBackend, image: torch.Tensor, class_index: ClassIndex,
             layer: Optional[str] = None) -> ActivationMap:
    return LayerCam()(model, image, class_index, layer)
