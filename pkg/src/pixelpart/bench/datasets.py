"""Datasets: a synthetic shapes task and the CIFAR-10 binary format.

CIFAR-10 binary batches are sequences of 3073-byte records: one label byte
followed by 1024 red, 1024 green and 1024 blue bytes, each plane row-major
over 32 x 32 pixels.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Union

import numpy as np
import torch

from ..base.exceptions import DatasetFormatError, ShapeMismatchError, SpecValidationError

logger = logging.getLogger(__name__)

Split = Literal["train", "test"]
Provenance = Literal["synthetic", "cifar10-binary"]

CIFAR_SHAPE = (3, 32, 32)
CIFAR_RECORD_BYTES = 1 + 3 * 32 * 32
CIFAR_NUM_CLASSES = 10
CIFAR_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR_TEST_FILES = ("test_batch.bin",)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Dataset:
    """Labeled images.

    Attributes:
        images: N x C x H x W float tensor in [0, 1]
        labels: N class indices
        split: "train" or "test"
        provenance: "synthetic" or "cifar10-binary"
        num_classes: Number of classes the labels index into
    """

    images: torch.Tensor
    labels: torch.Tensor
    split: Split = "train"
    provenance: Provenance = "synthetic"
    num_classes: int = 2

    def __post_init__(self):
        if self.images.dim() != 4:
            raise ShapeMismatchError("dataset images", ("N", "C", "H", "W"), tuple(self.images.shape))
        if self.images.shape[0] < 1:
            raise SpecValidationError("empty dataset")
        if min(self.images.shape[1:]) < 1:
            raise ShapeMismatchError("dataset images", ("N", "C>=1", "H>=1", "W>=1"), tuple(self.images.shape))
        if float(self.images.min()) < 0 or float(self.images.max()) > 1:
            raise SpecValidationError("pixels outside [0, 1]")
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeMismatchError("dataset labels", (self.images.shape[0],), tuple(self.labels.shape))
        if int(self.labels.min()) < 0 or int(self.labels.max()) >= self.num_classes:
            raise SpecValidationError("label out of range")

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_shape(self):
        return tuple(self.images.shape[1:])

    def subset(self, count: int) -> "Dataset":
        return Dataset(
            self.images[:count], self.labels[:count], self.split, self.provenance, self.num_classes
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels.numpy(), minlength=self.num_classes)


def synth_dataset(
    n: int,
    height: int = 16,
    width: int = 16,
    seed: int = 0,
    split: Split = "train",
    channels: int = 3,
) -> Dataset:
    """Bright squares (class 0) and crosses (class 1) on dark noise.

    Shapes are s x s with s = max(3, min(H, W) // 3), odd, placed uniformly
    at random. Classes alternate before a seeded shuffle, so the counts
    differ by at most one.
    """
    if n < 2:
        raise SpecValidationError("n < 2")
    size = max(3, min(height, width) // 3)
    size -= 1 - size % 2
    if size > min(height, width):
        raise SpecValidationError("image too small for the shapes")

    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % 2)
    images = rng.uniform(0.0, 0.2, size=(n, channels, height, width))

    template = {0: np.ones((size, size), dtype=bool), 1: np.zeros((size, size), dtype=bool)}
    template[1][size // 2, :] = True
    template[1][:, size // 2] = True

    for i, label in enumerate(labels):
        top = rng.integers(0, height - size + 1)
        left = rng.integers(0, width - size + 1)
        brightness = rng.uniform(0.8, 1.0)
        patch = images[i, :, top:top + size, left:left + size]
        patch[:, template[int(label)]] = brightness

    return Dataset(
        torch.from_numpy(images.astype(np.float32)),
        torch.from_numpy(labels.astype(np.int64)),
        split,
        "synthetic",
        2,
    )


def read_cifar10_batch(path: PathLike) -> tuple:
    """(images uint8 N x 3 x 32 x 32, labels uint8 N) from one batch file.

    Raises:
        DatasetFormatError: "truncated record" when the size is not a
            multiple of 3073 bytes, or a label byte above 9.
    """
    path = Path(path)
    data = np.fromfile(path, dtype=np.uint8)
    if data.size == 0 or data.size % CIFAR_RECORD_BYTES:
        raise DatasetFormatError(
            f"truncated record: {data.size} bytes is not a multiple of {CIFAR_RECORD_BYTES}",
            str(path),
        )
    records = data.reshape(-1, CIFAR_RECORD_BYTES)
    labels = records[:, 0]
    if int(labels.max()) >= CIFAR_NUM_CLASSES:
        bad = int(np.argmax(labels >= CIFAR_NUM_CLASSES))
        raise DatasetFormatError(
            f"label byte {int(labels[bad])} > 9 in record {bad}", str(path), record=bad
        )
    return records[:, 1:].reshape(-1, *CIFAR_SHAPE), labels


def load_cifar10_binary(path: PathLike, split: Split = "train") -> Dataset:
    """Load a batch file, or every batch of the split from a directory."""
    path = Path(path)
    if path.is_dir():
        names = CIFAR_TRAIN_FILES if split == "train" else CIFAR_TEST_FILES
        files = [path / name for name in names]
        missing = [str(f) for f in files if not f.exists()]
        if missing:
            raise DatasetFormatError("missing batch files", str(path), missing=missing)
    else:
        files = [path]

    parts = [read_cifar10_batch(f) for f in files]
    pixels = np.concatenate([p[0] for p in parts])
    labels = np.concatenate([p[1] for p in parts])
    logger.info("Loaded %d CIFAR-10 records from %d file(s)", len(labels), len(files))
    return Dataset(
        torch.from_numpy(pixels.astype(np.float32) / np.float32(255)),
        torch.from_numpy(labels.astype(np.int64)),
        split,
        "cifar10-binary",
        CIFAR_NUM_CLASSES,
    )


def write_cifar10_binary(path: PathLike, dataset: Dataset) -> Path:
    """Write 3 x 32 x 32 images as one batch file, pixels rounded to bytes."""
    if dataset.image_shape != CIFAR_SHAPE:
        raise ShapeMismatchError("cifar10 images", CIFAR_SHAPE, dataset.image_shape)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.rint(dataset.images.numpy().astype(np.float64) * 255).astype(np.uint8)
    records = np.empty((len(dataset), CIFAR_RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = dataset.labels.numpy().astype(np.uint8)
    records[:, 1:] = pixels.reshape(len(dataset), -1)
    records.tofile(path)
    return path
