"""Tests for model backends, losses, gradients and checkpoints."""

import logging
import math

import pytest
import torch

from pixelpart import ArchitectureSpec, LossFn, LossKind, NonFiniteError, build_model
from pixelpart.base.exceptions import CamLayerError, CheckpointError, ShapeMismatchError
from pixelpart.nn import (
    ScaledBackend,
    batch_feature_maps_and_grads,
    feature_maps_and_grads,
    forward,
    input_gradient,
    load_checkpoint,
    load_model,
    loss_and_input_gradient,
    save_checkpoint,
)


class TestForward:
    """Tests for forward evaluation."""

    def test_zero_image_gives_finite_logits(self, cnn):
        """A black image still gives finite logits."""
        logits = forward(cnn, torch.zeros((1, 3, 8, 8)))
        assert logits.shape == (1, 2)
        assert bool(torch.isfinite(logits).all())

    def test_batch_shape(self, cnn, batch):
        """Logits are N x num_classes."""
        assert forward(cnn, batch).shape == (4, 2)

    def test_linear_backend_is_affine(self):
        """A single linear layer computes w . x + b."""
        spec = ArchitectureSpec(kind="linear", in_channels=1, height=2, width=2, widths=(), num_classes=1)
        model = build_model(spec, dtype=torch.float64)
        with torch.no_grad():
            model.fc.weight.copy_(torch.tensor([[1.0, -2.0, 0.5, 3.0]]))
            model.fc.bias.fill_(0.25)
        x = torch.tensor([[[[1.0, 1.0], [2.0, 0.0]]]])
        assert float(forward(model, x)) == pytest.approx(1 - 2 + 1 + 0.25)

    def test_wrong_shape_rejected(self, cnn):
        """Inputs of the wrong size are rejected."""
        with pytest.raises(ShapeMismatchError):
            forward(cnn, torch.zeros((1, 3, 9, 8)))

    def test_non_finite_logits_rejected(self, cnn):
        """NaN inputs surface as NonFiniteError."""
        with pytest.raises(NonFiniteError):
            forward(cnn, torch.full((1, 3, 8, 8), float("nan")))

    def test_build_is_seeded(self, architecture):
        """Equal seeds give equal parameters."""
        a = build_model(architecture, seed=1)
        b = build_model(architecture, seed=1)
        assert all(torch.equal(p, q) for p, q in zip(a.parameters(), b.parameters()))

    def test_scaled_backend_scales_logits(self, cnn, batch):
        """ScaledBackend multiplies every logit by its scale."""
        scaled = ScaledBackend(cnn, 3.0)
        assert torch.allclose(forward(scaled, batch), 3.0 * forward(cnn, batch))


class TestLosses:
    """Tests for per-sample losses."""

    def test_uniform_logits_cross_entropy(self):
        """Uniform logits over two classes give ln 2."""
        loss = LossFn()(torch.zeros((1, 2)), torch.tensor([1]))
        assert float(loss) == pytest.approx(math.log(2))

    def test_confident_correct_logits_near_zero(self):
        """A confident correct prediction costs almost nothing."""
        loss = LossFn()(torch.tensor([[50.0, -50.0]]), torch.tensor([0]))
        assert float(loss) < 1e-12

    def test_kl_needs_reference(self):
        """The KL loss cannot run without reference logits."""
        with pytest.raises(ValueError, match="reference"):
            LossFn(LossKind.KL_DIVERGENCE)(torch.zeros((1, 2)), torch.tensor([0]))

    def test_kl_of_identical_logits_is_zero(self):
        """KL between identical distributions is zero."""
        logits = torch.tensor([[0.3, -1.2]])
        loss = LossFn(LossKind.KL_DIVERGENCE)(logits, torch.tensor([0]), logits)
        assert float(loss) == pytest.approx(0.0, abs=1e-15)

    def test_square_loss_single_output(self):
        """Single-output square loss is (y - f)^2."""
        loss = LossFn(LossKind.SQUARE)(torch.tensor([[0.5]]), torch.tensor([2.0]), reduction="none")
        assert loss.tolist() == [2.25]


class TestInputGradient:
    """Tests for input gradients against central finite differences."""

    def test_matches_finite_differences(self, cnn, batch, labels):
        """Two fixed coordinates agree with central differences."""
        loss = LossFn()
        grad = input_gradient(cnn, loss, batch, labels)
        h = 1e-6
        for row, index in ((0, (0, 2, 3)), (3, (2, 5, 1))):
            plus = batch.clone()
            minus = batch.clone()
            plus[(row, *index)] += h
            minus[(row, *index)] -= h
            with torch.no_grad():
                numeric = (
                    loss(cnn(plus), labels, reduction="sum") - loss(cnn(minus), labels, reduction="sum")
                ) / (2 * h)
            assert float(grad[(row, *index)]) == pytest.approx(float(numeric), rel=1e-4, abs=1e-8)

    def test_returns_per_sample_losses(self, cnn, batch, labels):
        """The combined call returns the per-sample losses too."""
        values, grad = loss_and_input_gradient(cnn, LossFn(), batch, labels)
        expected = LossFn()(forward(cnn, batch), labels, reduction="none")
        assert torch.allclose(values, expected)
        assert grad.shape == batch.shape

    def test_parameter_grads_untouched(self, cnn, batch, labels):
        """Input gradients leave parameter .grad empty."""
        input_gradient(cnn, LossFn(), batch, labels)
        assert all(p.grad is None for p in cnn.parameters())


class TestFeatureMaps:
    """Tests for CAM-layer activations and their gradients."""

    def test_shapes(self, cnn, batch):
        """conv2 maps and gradients are N x K x u x v."""
        maps, grads = batch_feature_maps_and_grads(cnn, batch, torch.tensor([0, 1, 1, 0]))
        assert maps.shape == (4, 8, 4, 4)
        assert grads.shape == maps.shape

    def test_single_image(self, cnn, batch):
        """A single image gives K x u x v maps."""
        maps, grads = feature_maps_and_grads(cnn, batch[0], 1, "conv1")
        assert maps.shape == (4, 8, 8)
        assert grads.shape == (4, 8, 8)

    def test_rows_are_independent(self, cnn, batch):
        """A batched call gives every row the gradient of its own class score."""
        classes = torch.tensor([0, 1, 1, 0])
        _, batched = batch_feature_maps_and_grads(cnn, batch, classes)
        _, single = feature_maps_and_grads(cnn, batch[2], 1)
        assert torch.allclose(batched[2], single)

    def test_model_without_conv_layer(self):
        """A linear model has no CAM layer."""
        spec = ArchitectureSpec(kind="linear", height=4, width=4, widths=(), cam_layer="")
        model = build_model(spec)
        with pytest.raises(CamLayerError):
            batch_feature_maps_and_grads(model, torch.zeros((1, 3, 4, 4)), torch.tensor([0]))

    def test_unknown_layer(self, cnn, batch):
        """Asking for a non-conv layer is rejected."""
        with pytest.raises(CamLayerError, match="unknown CAM layer"):
            batch_feature_maps_and_grads(cnn, batch, torch.tensor([0, 0, 0, 0]), "fc")


class TestCheckpoint:
    """Tests for the binary checkpoint codec."""

    def test_round_trip_is_bitwise(self, architecture, tmp_path):
        """float32 parameters survive a save and load bit for bit."""
        model = build_model(architecture, seed=9)
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        restored = load_model(path)
        for (name, a), (_, b) in zip(model.state_dict().items(), restored.state_dict().items()):
            assert torch.equal(a, b), name

    def test_wrong_architecture_rejected(self, architecture, tmp_path):
        """Loading into a different architecture fails."""
        path = tmp_path / "model.ckpt"
        save_checkpoint(build_model(architecture), path)
        other = build_model(ArchitectureSpec(height=8, width=8, widths=(4, 16)))
        with pytest.raises(CheckpointError, match="architecture mismatch"):
            load_checkpoint(other, path)

    def test_truncated_file_rejected(self, architecture, tmp_path):
        """A truncated file is reported as such."""
        path = tmp_path / "model.ckpt"
        save_checkpoint(build_model(architecture), path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(CheckpointError, match="truncated"):
            load_model(path)

    def test_bad_magic_rejected(self, tmp_path):
        """Files without the magic header are rejected."""
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + bytes(16))
        with pytest.raises(CheckpointError, match="bad magic"):
            load_model(path)

    def test_float64_model_warns_on_save(self, cnn, tmp_path, caplog):
        """Saving double-precision parameters logs the narrowing to float32."""
        with caplog.at_level(logging.WARNING, logger="pixelpart.nn.checkpoint"):
            save_checkpoint(cnn, tmp_path / "model.ckpt")
        assert "lose precision" in caplog.text
        assert "torch.float64" in caplog.text

    def test_float32_model_saves_quietly(self, architecture, tmp_path, caplog):
        """float32 parameters are stored as they are, without a warning."""
        with caplog.at_level(logging.WARNING, logger="pixelpart.nn.checkpoint"):
            save_checkpoint(build_model(architecture), tmp_path / "model.ckpt")
        assert "lose precision" not in caplog.text


FD_STEP = 1e-6
FD_CASES = range(20)


def central_difference(function, point, index, h=FD_STEP):
    plus = point.clone()
    minus = point.clone()
    plus[index] += h
    minus[index] -= h
    with torch.no_grad():
        return float((function(plus) - function(minus)) / (2 * h))


def random_case(seed):
    """A seeded model, batch, label vector and loss for one finite-difference case."""
    generator = torch.Generator().manual_seed(1000 + seed)
    kind = ("reference_cnn", "one_conv")[seed % 2]
    widths = (4, 6) if kind == "reference_cnn" else (5,)
    spec = ArchitectureSpec(kind=kind, height=8, width=8, widths=widths, cam_layer="conv1", num_classes=3)
    model = build_model(spec, seed=seed, dtype=torch.float64)
    batch = torch.rand((2, 3, 8, 8), generator=generator, dtype=torch.float64)
    labels = torch.randint(0, 3, (2,), generator=generator)
    loss = LossFn(LossKind.SQUARE if seed % 3 == 0 else LossKind.CROSS_ENTROPY)
    return model, batch, labels, loss, generator


def conv2_head(model):
    """Class scores of the reference CNN as a function of its conv2 activations."""
    return lambda a2: model.fc(torch.nn.functional.max_pool2d(a2, 2).mean(dim=(2, 3)))


def one_conv_head(model):
    return lambda a1: model.fc(a1.mean(dim=(2, 3)))


def away_from_pool_ties(maps, index, gap=1e-3):
    """True when the entry sits clear of every other value in its 2 x 2 pooling window."""
    k, i, j = index
    top, left = i - i % 2, j - j % 2
    window = maps[k, top:top + 2, left:left + 2].flatten()
    others = window[window != maps[index]]
    return len(others) == 3 and bool(((others - maps[index]).abs() > gap).all())


class TestFiniteDifferenceSweep:
    """Input and feature-map gradients against central differences on random cases."""

    @pytest.mark.parametrize("seed", FD_CASES)
    def test_input_gradient(self, seed):
        """Three random input coordinates per case agree to 1e-4 relative error."""
        model, batch, labels, loss, generator = random_case(seed)
        grad = input_gradient(model, loss, batch, labels)

        def total(x):
            return loss(model(x), labels, reduction="sum")

        for _ in range(3):
            index = tuple(int(torch.randint(0, n, (1,), generator=generator)) for n in batch.shape)
            numeric = central_difference(total, batch, index)
            assert float(grad[index]) == pytest.approx(numeric, rel=1e-4, abs=1e-7)

    @pytest.mark.parametrize("seed", FD_CASES)
    def test_feature_map_gradient(self, seed):
        """dY_c/dA matches differences of the class score in the activations."""
        model, batch, labels, _, generator = random_case(seed)
        image, label = batch[0], int(labels[0])
        if model.architecture.kind == "reference_cnn":
            layer, head = "conv2", conv2_head(model)
        else:
            layer, head = "conv1", one_conv_head(model)
        maps, grads = feature_maps_and_grads(model, image, label, layer)

        def score(a):
            return head(a.unsqueeze(0))[0, label]

        checked = 0
        for _ in range(50):
            index = tuple(int(torch.randint(0, n, (1,), generator=generator)) for n in maps.shape)
            if layer == "conv2" and not away_from_pool_ties(maps, index):
                continue
            numeric = central_difference(score, maps, index)
            assert float(grads[index]) == pytest.approx(numeric, rel=1e-4, abs=1e-8)
            checked += 1
            if checked == 3:
                break
        assert checked > 0
