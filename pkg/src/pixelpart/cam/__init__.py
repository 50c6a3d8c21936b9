"""Class activation maps and the pixel-weight field derived from them."""

from .heatmap import COLOR_RAMP, overlay, read_ppm, render_heatmap, write_ppm
from .maps import ActivationMap
from .methods import BaseCamMethod, GradCam, LayerCam, XGradCam, gradcam, layercam, xgradcam
from .processing import compute_weight_field, resize_map, scale_map

__all__ = [
    "ActivationMap",
    "BaseCamMethod",
    "GradCam",
    "XGradCam",
    "LayerCam",
    "gradcam",
    "xgradcam",
    "layercam",
    "resize_map",
    "scale_map",
    "compute_weight_field",
    "COLOR_RAMP",
    "render_heatmap",
    "overlay",
    "write_ppm",
    "read_ppm",
]
