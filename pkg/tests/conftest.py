"""Pytest fixtures and shared test utilities for pixelpart tests."""

import pytest
import torch

from pixelpart import (
    ArchitectureSpec,
    AttackSpec,
    BaseCamMethod,
    CamMethodMetadata,
    CamRegistry,
    TrainSpec,
    build_model,
    synth_dataset,
)
from pixelpart.nn.models import ModelBackend


class ConstantNet(ModelBackend):
    """Ignores its input and always predicts class 0."""

    def forward_features(self, x, layer=None):
        logits = torch.zeros((x.shape[0], self.num_classes), dtype=x.dtype)
        logits[:, 0] = 1.0
        return logits + 0.0 * x.sum(), None


class PixelNet(ModelBackend):
    """One-pixel model f(x) = (0, w * x) whose class-1 score grows with the pixel."""

    def __init__(self, weight: float = 1.0):
        super().__init__(
            ArchitectureSpec(kind="linear", in_channels=1, height=1, width=1, widths=(), cam_layer="")
        )
        self.weight = weight

    def forward_features(self, x, layer=None):
        score = self.weight * x.flatten(start_dim=1)
        return torch.cat([torch.zeros_like(score), score], dim=1), None


class UniformCam(BaseCamMethod):
    """Test method whose weights are all ones."""

    @staticmethod
    def get_metadata() -> CamMethodMetadata:
        return CamMethodMetadata(name="uniform", description="All-ones weights for tests")

    def pixel_weights(self, maps, grads):
        return torch.ones_like(maps)


class UniformCamV2(UniformCam):
    """Same name as UniformCam, higher version."""

    @staticmethod
    def get_metadata() -> CamMethodMetadata:
        return CamMethodMetadata(
            name="uniform", description="All-ones weights for tests", version="2.0.0"
        )


@pytest.fixture(autouse=True)
def float64_default():
    """Run every test in double precision."""
    previous = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield
    torch.set_default_dtype(previous)


@pytest.fixture
def architecture():
    """Small reference CNN on 3 x 8 x 8 images."""
    return ArchitectureSpec(height=8, width=8, widths=(4, 8))


@pytest.fixture
def cnn(architecture):
    return build_model(architecture, seed=3, dtype=torch.float64)


@pytest.fixture
def one_conv():
    spec = ArchitectureSpec(kind="one_conv", height=8, width=8, widths=(4,), cam_layer="conv1")
    return build_model(spec, seed=5, dtype=torch.float64)


@pytest.fixture
def batch():
    generator = torch.Generator().manual_seed(11)
    return torch.rand((4, 3, 8, 8), generator=generator, dtype=torch.float64)


@pytest.fixture
def labels():
    return torch.tensor([0, 1, 0, 1])


@pytest.fixture
def tiny_data():
    data = synth_dataset(16, 8, 8, seed=2)
    return type(data)(data.images.double(), data.labels, data.split, data.provenance, data.num_classes)


@pytest.fixture
def tiny_spec():
    """Two-epoch PART run on 8 x 8 images."""
    return TrainSpec(
        epochs=2,
        burn_in=1,
        batch_size=8,
        lr_decay_epoch=2,
        attack=AttackSpec(iterations=2),
        eval_attack=AttackSpec(iterations=2),
        log_interval=1,
    )


@pytest.fixture
def constant_net():
    return ConstantNet(ArchitectureSpec(kind="linear", height=8, width=8, widths=(), cam_layer=""))


@pytest.fixture
def pixel_net():
    return PixelNet()


@pytest.fixture
def cam_registry(monkeypatch):
    """Fresh registry holding only the built-in methods."""
    monkeypatch.setattr(CamRegistry, "_instance", None)
    return CamRegistry.instance()


@pytest.fixture
def uniform_cam():
    return UniformCam


@pytest.fixture
def uniform_cam_v2():
    return UniformCamV2
