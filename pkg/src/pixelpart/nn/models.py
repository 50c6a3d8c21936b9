"""Differentiable model backends.

Every backend is a torch module that can also hand back the activations of
a named layer, which is what class activation maps read. The architecture
is described by an ArchitectureSpec whose canonical JSON doubles as the
checkpoint architecture descriptor.
"""

import json
from abc import ABC, abstractmethod
from typing import Literal, Optional, Tuple

import torch
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict
from torch import nn

from ..base.exceptions import CamLayerError, ShapeMismatchError

ModelKind = Literal["reference_cnn", "one_conv", "linear"]


class ArchitectureSpec(BaseModel):
    """Shape and layer description of a backend.

    Attributes:
        kind: "reference_cnn" (two conv blocks), "one_conv" or "linear"
        in_channels, height, width: Expected input shape (C, H, W)
        widths: Output channels of each conv layer
        num_classes: Number of logits
        cam_layer: Default layer read by CAM methods ("" for none)
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ModelKind = "reference_cnn"
    in_channels: int = 3
    height: int = 16
    width: int = 16
    widths: Tuple[int, ...] = (16, 32)
    num_classes: int = 2
    cam_layer: str = "conv2"

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        return (self.in_channels, self.height, self.width)

    def descriptor(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_descriptor(cls, descriptor: str) -> "ArchitectureSpec":
        return cls.model_validate(json.loads(descriptor))


class ModelBackend(nn.Module, ABC):
    """Base class for models the attacks, CAM methods and trainer accept."""

    def __init__(self, architecture: ArchitectureSpec):
        super().__init__()
        self.architecture = architecture

    @property
    def num_classes(self) -> int:
        return self.architecture.num_classes

    @property
    def descriptor(self) -> str:
        return self.architecture.descriptor()

    @property
    def cam_layers(self) -> Tuple[str, ...]:
        """Names of layers whose activations forward_features can expose."""
        return ()

    @abstractmethod
    def forward_features(
        self, x: torch.Tensor, layer: Optional[str] = None
    ) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
        """Return logits and, when a layer is named, that layer's activations."""
        ...

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        logits, _ = self.forward_features(x)
        return logits

    def resolve_cam_layer(self, layer: Optional[str] = None) -> str:
        name = layer or self.architecture.cam_layer
        if not self.cam_layers:
            raise CamLayerError(f"{type(self).__name__} has no convolutional layer", name)
        if name not in self.cam_layers:
            raise CamLayerError(
                f"unknown CAM layer {name!r}; available: {', '.join(self.cam_layers)}", name
            )
        return name

    def check_input(self, batch: torch.Tensor) -> None:
        expected = self.architecture.input_shape
        if batch.dim() != 4 or tuple(batch.shape[1:]) != expected:
            raise ShapeMismatchError("input batch", ("N", *expected), tuple(batch.shape))


class ReferenceCNN(ModelBackend):
    """Conv-ReLU-MaxPool twice, global average pool, linear head.

    The second conv block is the default CAM layer.
    """

    def __init__(self, architecture: ArchitectureSpec):
        super().__init__(architecture)
        first, second = architecture.widths
        self.conv1 = nn.Conv2d(architecture.in_channels, first, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(first, second, kernel_size=3, padding=1)
        self.fc = nn.Linear(second, architecture.num_classes)

    @property
    def cam_layers(self) -> Tuple[str, ...]:
        return ("conv1", "conv2")

    def forward_features(self, x, layer=None):
        a1 = F.relu(self.conv1(x))
        a2 = F.relu(self.conv2(F.max_pool2d(a1, 2)))
        pooled = F.max_pool2d(a2, 2).mean(dim=(2, 3))
        features = {"conv1": a1, "conv2": a2}.get(layer) if layer else None
        return self.fc(pooled), features


class OneConvNet(ModelBackend):
    """Conv-ReLU, global average pool, linear head."""

    def __init__(self, architecture: ArchitectureSpec):
        super().__init__(architecture)
        (channels,) = architecture.widths
        self.conv1 = nn.Conv2d(architecture.in_channels, channels, kernel_size=3, padding=1)
        self.fc = nn.Linear(channels, architecture.num_classes)

    @property
    def cam_layers(self) -> Tuple[str, ...]:
        return ("conv1",)

    def forward_features(self, x, layer=None):
        a1 = F.relu(self.conv1(x))
        return self.fc(a1.mean(dim=(2, 3))), (a1 if layer == "conv1" else None)


class LinearBackend(ModelBackend):
    """f(x) = W x + b on the flattened image."""

    def __init__(self, architecture: ArchitectureSpec):
        super().__init__(architecture)
        d = architecture.in_channels * architecture.height * architecture.width
        self.fc = nn.Linear(d, architecture.num_classes)

    def forward_features(self, x, layer=None):
        return self.fc(x.flatten(start_dim=1)), None


class ScaledBackend(ModelBackend):
    """Multiplies the logits of another backend by a positive constant."""

    def __init__(self, inner: ModelBackend, scale: float):
        if not scale > 0:
            raise ValueError("scale must be positive")
        super().__init__(inner.architecture)
        self.inner = inner
        self.scale = scale

    @property
    def cam_layers(self) -> Tuple[str, ...]:
        return self.inner.cam_layers

    def forward_features(self, x, layer=None):
        logits, features = self.inner.forward_features(x, layer)
        return logits * self.scale, features


_BUILDERS = {
    "reference_cnn": ReferenceCNN,
    "one_conv": OneConvNet,
    "linear": LinearBackend,
}


def build_model(
    architecture: ArchitectureSpec, seed: int = 0, dtype: torch.dtype = torch.float32
) -> ModelBackend:
    """Construct a backend with parameters drawn from a seeded stream.

    The global torch RNG state is restored afterwards.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = _BUILDERS[architecture.kind](architecture)
    return model.to(dtype)
