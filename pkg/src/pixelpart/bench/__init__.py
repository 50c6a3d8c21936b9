"""Datasets, experiment runners and result persistence."""

from .datasets import (
    Dataset,
    load_cifar10_binary,
    read_cifar10_batch,
    synth_dataset,
    write_cifar10_binary,
)
from .experiments import (
    DEFAULT_EPS_LOW_GRID,
    EpsLowSweep,
    ExperimentRunner,
    QuadrantExperiment,
    TrainJob,
    low_region_monotone,
    low_region_perturbation,
    run_epslow_sweep,
    run_job,
    run_quadrant_experiment,
)
from .heatmaps import export_heatmaps
from .manifest import RunManifest, tensor_digest, write_table
from .regional import RegionalBudget, quadrant_mask

__all__ = [
    "Dataset",
    "synth_dataset",
    "load_cifar10_binary",
    "read_cifar10_batch",
    "write_cifar10_binary",
    "RegionalBudget",
    "quadrant_mask",
    "ExperimentRunner",
    "QuadrantExperiment",
    "EpsLowSweep",
    "TrainJob",
    "run_job",
    "run_quadrant_experiment",
    "run_epslow_sweep",
    "low_region_perturbation",
    "low_region_monotone",
    "DEFAULT_EPS_LOW_GRID",
    "export_heatmaps",
    "RunManifest",
    "tensor_digest",
    "write_table",
]
