"""Heatmap rendering and binary PPM (P6) export.

Pixel weights omega in [0, 2] index a 256-entry jet ramp at
k = round(255 * omega / 2). Entry k holds, for t = k / 255,

    r = clip(1.5 - |4t - 3|), g = clip(1.5 - |4t - 2|), b = clip(1.5 - |4t - 1|)

each stored as floor(255 * c + 0.5). A degenerate map renders entirely in
entry 0. The overlay blends half image and half ramp color:
floor(127.5 * pixel + 127.5 * ramp / 255 + 0.5) per channel.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import torch

from ..base.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)

RAMP_SIZE = 256


def _build_ramp() -> np.ndarray:
    t = np.arange(RAMP_SIZE, dtype=np.float64) / (RAMP_SIZE - 1)
    centers = np.array([3.0, 2.0, 1.0])
    channels = np.clip(1.5 - np.abs(4.0 * t[:, None] - centers[None, :]), 0.0, 1.0)
    return np.floor(255.0 * channels + 0.5).astype(np.uint8)


COLOR_RAMP = _build_ramp()
COLOR_RAMP.setflags(write=False)


def ramp_indices(omega: torch.Tensor, degenerate: bool = False) -> np.ndarray:
    """Ramp entry per pixel for an H x W weight field."""
    values = omega.detach().cpu().double().numpy()
    if degenerate:
        return np.zeros(values.shape, dtype=np.intp)
    scaled = np.floor((RAMP_SIZE - 1) * np.clip(values, 0.0, 2.0) / 2.0 + 0.5)
    return scaled.astype(np.intp)


def render_heatmap(omega: torch.Tensor, degenerate: bool = False) -> np.ndarray:
    """H x W x 3 uint8 colors for a weight field."""
    return COLOR_RAMP[ramp_indices(omega, degenerate)]


def overlay(image: torch.Tensor, heatmap: np.ndarray) -> np.ndarray:
    """Blend a C x H x W image in [0, 1] (C = 1 or 3) with a rendered heatmap."""
    pixels = image.detach().cpu().double().numpy()
    if pixels.ndim != 3 or pixels.shape[0] not in (1, 3):
        raise ShapeMismatchError("overlay image", ("1|3", "H", "W"), pixels.shape)
    if pixels.shape[1:] != heatmap.shape[:2]:
        raise ShapeMismatchError("overlay heatmap", pixels.shape[1:] + (3,), heatmap.shape)
    rgb = np.broadcast_to(pixels.transpose(1, 2, 0), heatmap.shape)
    blended = np.floor(127.5 * rgb + 127.5 * heatmap.astype(np.float64) / 255.0 + 0.5)
    return np.clip(blended, 0, 255).astype(np.uint8)


def write_ppm(path: Union[str, Path], rgb: np.ndarray) -> Path:
    """Write an H x W x 3 uint8 array as a binary PPM."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ShapeMismatchError("ppm pixels", ("H", "W", 3), rgb.shape)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(rgb).tobytes())
    logger.debug("Wrote %dx%d heatmap to %s", width, height, path)
    return path


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    """Read back a binary PPM written by write_ppm."""
    data = Path(path).read_bytes()
    magic, dims, maxval, payload = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError(f"{path}: not an 8-bit binary PPM")
    width, height = (int(part) for part in dims.split())
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
