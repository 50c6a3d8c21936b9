"""Inner maximization: PGD, Pixel-AG, the adaptive attack and sanity checks."""

from .adaptive import ADAPTIVE_EPS, ADAPTIVE_EPS_LOW, adaptive_pgd, adaptive_spec
from .masks import cam_mask, generate_mask
from .pgd import image_generator, pgd, pixel_ag, random_start_noise, run_attack
from .results import AttackResult, predictions, robust_correct
from .sanity import SanityConfig, SanityItem, SanityReport, SanitySuite, sanity_suite

__all__ = [
    "AttackResult",
    "generate_mask",
    "cam_mask",
    "pgd",
    "pixel_ag",
    "run_attack",
    "image_generator",
    "random_start_noise",
    "adaptive_pgd",
    "adaptive_spec",
    "ADAPTIVE_EPS",
    "ADAPTIVE_EPS_LOW",
    "predictions",
    "robust_correct",
    "SanityConfig",
    "SanityItem",
    "SanityReport",
    "SanitySuite",
    "sanity_suite",
]
