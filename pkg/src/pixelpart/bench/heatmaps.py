"""Overlay heatmaps of a model's activation maps, one PPM per image."""

import logging
from pathlib import Path
from typing import List, Optional, Union

import torch

from ..attack.results import predictions
from ..cam.heatmap import overlay, render_heatmap, write_ppm
from ..cam.processing import compute_weight_field
from ..core.specs import Scaling
from ..nn.models import ModelBackend

logger = logging.getLogger(__name__)


def export_heatmaps(
    model: ModelBackend,
    images: torch.Tensor,
    out_dir: Union[str, Path],
    classes: Optional[torch.Tensor] = None,
    method: str = "gradcam",
    layer: Optional[str] = None,
    scaling: Union[Scaling, str] = Scaling.MINMAX,
    blend: bool = True,
) -> List[Path]:
    """Write heatmap_NNNN.ppm for every image.

    Maps are computed for classes when given, otherwise for the predicted
    class. With blend=False the bare color ramp is written.
    """
    out_dir = Path(out_dir)
    targets = classes if classes is not None else predictions(model, images)
    cam = compute_weight_field(model, images, targets, method, layer, scaling)

    paths = []
    for i in range(images.shape[0]):
        colors = render_heatmap(cam.scaled[i], bool(cam.degenerate[i]))
        if blend:
            colors = overlay(images[i], colors)
        paths.append(write_ppm(out_dir / f"heatmap_{i:04d}.ppm", colors))
    logger.info("Wrote %d heatmaps to %s", len(paths), out_dir)
    return paths
