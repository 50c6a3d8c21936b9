"""Experiment runners: quadrant budget allocations and the eps_low sweep.

Each runner trains one model per configuration with identical seeds, so
rows differ only in the quantity being varied. Jobs run sequentially, or
in a spawn-based process pool when more than one worker is allowed; rows
are collected in submission order either way.
"""

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ..attack.masks import cam_mask
from ..attack.pgd import pixel_ag
from ..base.exceptions import SpecValidationError
from ..base.loggable import Loggable
from ..core.config import num_workers
from ..core.specs import MaskMode, Method, TrainSpec, replace_spec
from ..core.tensors import BudgetMask
from ..nn.losses import LossFn
from ..nn.models import ArchitectureSpec, build_model
from ..train.evaluate import evaluate
from ..train.trainer import train
from .datasets import Dataset
from .manifest import RunManifest, tensor_digest, write_table
from .regional import RegionalBudget, quadrant_mask

PathLike = Union[str, Path]

QUADRANT_COLUMNS = ("allocation", "eps_ul", "eps_ur", "eps_bl", "eps_br", "nat_acc", "rob_acc_pgd20")
SWEEP_COLUMNS = ("eps", "eps_low", "nat_acc", "rob_acc_pgd20", "d_low", "low_mean_abs_delta")
DEFAULT_EPS_LOW_GRID = (7 / 255, 6 / 255, 5 / 255, 4 / 255)


@dataclass(frozen=True)
class TrainJob:
    """One independent training run; picklable for process pools."""

    train_data: Dataset
    test_data: Dataset
    spec: TrainSpec
    architecture: ArchitectureSpec
    fixed_mask: Optional[BudgetMask] = None
    measure_low_region: bool = False


def run_job(job: TrainJob) -> Dict[str, Any]:
    model = build_model(job.architecture, seed=job.spec.seed, dtype=job.train_data.images.dtype)
    state = train(job.train_data, job.spec, model, fixed_mask=job.fixed_mask)
    evaluation = evaluate(
        state.model,
        job.test_data,
        {"pgd20": job.spec.eval_attack},
        seed=job.spec.seed,
    )
    row: Dict[str, Any] = {
        "nat_acc": evaluation.natural_accuracy,
        "rob_acc_pgd20": evaluation.robust_accuracy["pgd20"],
    }
    if job.measure_low_region:
        row.update(low_region_perturbation(state.model, job.test_data, job.spec))
    return row


def low_region_perturbation(model, dataset: Dataset, spec: TrainSpec) -> Dict[str, float]:
    """Mean |delta| over unimportant pixels of Pixel-AG examples on the data."""
    attack = replace_spec(spec.attack, mask_mode=MaskMode.PIXEL_AG.value)
    mask = cam_mask(
        model, dataset.images, dataset.labels, attack.eps, attack.eps_low,
        spec.cam_method, spec.cam_layer, spec.scaling,
    )
    result = pixel_ag(model, LossFn(), dataset.images, dataset.labels, attack, mask, spec.seed)
    low = mask.gather(result.perturbation.delta, "low").abs()
    d_low = mask.d_low
    mean = float(low.double().mean()) if low.numel() else math.nan
    return {"d_low": d_low, "low_mean_abs_delta": mean}


class ExperimentRunner(Loggable):
    """Shared job execution, manifest and table output."""

    name = "experiment"
    columns: Sequence[str] = ()

    def __init__(
        self,
        train_data: Dataset,
        test_data: Dataset,
        spec: TrainSpec,
        architecture: Optional[ArchitectureSpec] = None,
        out_dir: Optional[PathLike] = None,
        workers: Optional[int] = None,
    ):
        self.train_data = train_data
        self.test_data = test_data
        self.spec = spec
        self.architecture = architecture or default_architecture(train_data, spec)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.workers = workers if workers is not None else num_workers()

    def log_context(self):
        return {"runner": self.name}

    def execute(self, jobs: Sequence[TrainJob]) -> List[Dict[str, Any]]:
        if self.workers > 1 and len(jobs) > 1:
            context = multiprocessing.get_context("spawn")
            with ProcessPoolExecutor(min(self.workers, len(jobs)), mp_context=context) as pool:
                self.logger.info("%d jobs on %d workers", len(jobs), self.workers)
                return list(pool.map(run_job, jobs))
        results = []
        for number, job in enumerate(jobs, start=1):
            self.logger.info("job %d/%d", number, len(jobs))
            results.append(run_job(job))
        return results

    def finish(self, rows: List[Dict[str, Any]], parameters: Dict[str, Any]) -> List[Dict[str, Any]]:
        if self.out_dir is not None:
            write_table(self.out_dir / f"{self.name}.csv", self.columns, rows)
            RunManifest(
                runner=self.name,
                seed=self.spec.seed,
                config=self.spec.model_dump(mode="json", by_alias=True),
                inputs_sha256={
                    "train": tensor_digest(self.train_data.images, self.train_data.labels),
                    "test": tensor_digest(self.test_data.images, self.test_data.labels),
                },
                parameters={"architecture": self.architecture.model_dump(mode="json"), **parameters},
            ).write(self.out_dir)
        return rows


def default_architecture(dataset: Dataset, spec: TrainSpec) -> ArchitectureSpec:
    channels, height, width = dataset.image_shape
    return ArchitectureSpec(
        in_channels=channels,
        height=height,
        width=width,
        num_classes=dataset.num_classes,
        cam_layer=spec.cam_layer,
    )


class QuadrantExperiment(ExperimentRunner):
    """Trains with regional budgets instead of activation-map masks."""

    name = "quadrant"
    columns = QUADRANT_COLUMNS

    def run(self, allocations: Sequence[RegionalBudget], eps_ref: Optional[float] = None):
        if len(allocations) < 2:
            raise SpecValidationError("fewer than 2 allocations")
        eps_ref = eps_ref if eps_ref is not None else max(max(a.budgets) for a in allocations)
        _, height, width = self.train_data.image_shape

        jobs = []
        for allocation in allocations:
            mask = quadrant_mask(allocation, height, width, eps_ref, self.train_data.images.dtype)
            attack = replace_spec(
                self.spec.attack, eps=eps_ref, eps_low=mask.eps_low, mask_mode=MaskMode.PIXEL_AG.value
            )
            spec = replace_spec(self.spec, attack=attack.model_dump())
            jobs.append(TrainJob(self.train_data, self.test_data, spec, self.architecture, mask))

        rows = []
        for allocation, result in zip(allocations, self.execute(jobs)):
            rows.append({
                "allocation": allocation.label(),
                "eps_ul": allocation.ul,
                "eps_ur": allocation.ur,
                "eps_bl": allocation.bl,
                "eps_br": allocation.br,
                **result,
            })
        return self.finish(rows, {"eps_ref": eps_ref, "allocations": [a.budgets for a in allocations]})


class EpsLowSweep(ExperimentRunner):
    """One reweighted run per eps_low at a fixed eps."""

    name = "sweep"
    columns = SWEEP_COLUMNS

    def run(self, eps: Optional[float] = None, eps_lows: Sequence[float] = DEFAULT_EPS_LOW_GRID):
        eps = eps if eps is not None else self.spec.attack.eps
        if any(value > eps for value in eps_lows):
            raise SpecValidationError("eps_low > eps")

        method = self.spec.method if self.spec.method.is_part else Method.PART
        jobs = []
        for eps_low in eps_lows:
            attack = replace_spec(self.spec.attack, eps=eps, eps_low=eps_low)
            spec = replace_spec(self.spec, method=method.value, attack=attack.model_dump())
            jobs.append(
                TrainJob(self.train_data, self.test_data, spec, self.architecture, measure_low_region=True)
            )

        rows = [
            {"eps": eps, "eps_low": eps_low, **result}
            for eps_low, result in zip(eps_lows, self.execute(jobs))
        ]
        monotone = low_region_monotone(rows)
        self.logger.info("low-region perturbation non-increasing in eps_low: %s", monotone)
        return self.finish(rows, {"eps": eps, "eps_lows": list(eps_lows), "low_region_monotone": monotone})


def low_region_monotone(rows: Sequence[Dict[str, Any]]) -> bool:
    """Mean low-region |delta| never grows as eps_low decreases (NaN rows skipped)."""
    measured = sorted(
        (row["eps_low"], row["low_mean_abs_delta"])
        for row in rows
        if not math.isnan(row["low_mean_abs_delta"])
    )
    return all(a[1] <= b[1] for a, b in zip(measured, measured[1:]))


def run_quadrant_experiment(
    train_data: Dataset,
    test_data: Dataset,
    spec: TrainSpec,
    allocations: Sequence[RegionalBudget],
    eps_ref: Optional[float] = None,
    architecture: Optional[ArchitectureSpec] = None,
    out_dir: Optional[PathLike] = None,
    workers: Optional[int] = None,
) -> List[Dict[str, Any]]:
    runner = QuadrantExperiment(train_data, test_data, spec, architecture, out_dir, workers)
    return runner.run(allocations, eps_ref)


def run_epslow_sweep(
    train_data: Dataset,
    test_data: Dataset,
    spec: TrainSpec,
    eps: Optional[float] = None,
    eps_lows: Sequence[float] = DEFAULT_EPS_LOW_GRID,
    architecture: Optional[ArchitectureSpec] = None,
    out_dir: Optional[PathLike] = None,
    workers: Optional[int] = None,
) -> List[Dict[str, Any]]:
    runner = EpsLowSweep(train_data, test_data, spec, architecture, out_dir, workers)
    return runner.run(eps, eps_lows)
