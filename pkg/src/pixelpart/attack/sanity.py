"""Obfuscated-gradient checklist.

Five checks that a robust model's accuracy reflects real robustness
rather than gradient masking:

    one_step_vs_iterative  PGD-1 robust accuracy >= PGD-K robust accuracy
    transfer               attacks crafted on a surrogate do no better than white-box
    unbounded              eps = 1 drives robust accuracy to 0
    random_sampling        uniform draws in the eps box rarely beat PGD survivors
    increasing_eps         robust accuracy is non-increasing in eps
"""

from typing import Dict, List, Optional, Tuple

import torch
from pydantic import BaseModel, ConfigDict, Field

from ..base.loggable import Loggable
from ..core.specs import DEFAULT_ALPHA, DEFAULT_EPS, EVAL_ITERATIONS, AttackSpec, Real
from ..nn.losses import LossFn
from ..nn.models import ModelBackend
from .pgd import image_generator, pgd
from .results import predictions, robust_correct


class SanityConfig(BaseModel):
    """Budgets and sample sizes of the checklist."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps: Real = DEFAULT_EPS
    alpha: Real = DEFAULT_ALPHA
    iterations: int = EVAL_ITERATIONS
    unbounded_alpha: Real = 0.1
    unbounded_iterations: int = 50
    random_draws: int = 100
    max_survivors: int = 32
    pass_fraction: Real = 0.9
    sweep_eps: Tuple[Real, ...] = (8 / 255, 16 / 255, 32 / 255, 64 / 255)
    sweep_iterations: int = 20
    seed: int = 0


class SanityItem(BaseModel):
    """One check; passed is None when the check was skipped."""

    name: str
    passed: Optional[bool]
    values: Dict[str, float] = Field(default_factory=dict)
    note: str = ""


class SanityReport(BaseModel):
    items: List[SanityItem]

    @property
    def all_passed(self) -> bool:
        return all(item.passed is not False for item in self.items)

    def item(self, name: str) -> SanityItem:
        for entry in self.items:
            if entry.name == name:
                return entry
        raise KeyError(name)


class SanitySuite(Loggable):
    """Runs the checklist on one evaluation sample."""

    def __init__(
        self,
        model: ModelBackend,
        config: Optional[SanityConfig] = None,
        surrogate: Optional[ModelBackend] = None,
    ):
        self.model = model
        self.config = config or SanityConfig()
        self.surrogate = surrogate
        self.loss = LossFn()

    def run(self, batch: torch.Tensor, labels: torch.Tensor) -> SanityReport:
        labels = labels.long()
        iterative = pgd(self.model, self.loss, batch, labels, self._spec(), self.config.seed)
        items = [
            self.one_step_vs_iterative(batch, labels, iterative.adversarial),
            self.transfer(batch, labels, iterative.adversarial),
            self.unbounded(batch, labels),
            self.random_sampling(batch, labels, iterative.adversarial),
            self.increasing_eps(batch, labels),
        ]
        for entry in items:
            self.logger.info("sanity %s: %s %s", entry.name, _verdict(entry.passed), entry.values)
        return SanityReport(items=items)

    def one_step_vs_iterative(self, batch, labels, iterative_adv) -> SanityItem:
        one_step = AttackSpec(
            eps=self.config.eps,
            eps_low=self.config.eps,
            alpha=self.config.eps,
            iterations=1,
            random_start=False,
        )
        single = pgd(self.model, self.loss, batch, labels, one_step, self.config.seed)
        rob_one = self._robust_accuracy(batch, single.adversarial, labels)
        rob_many = self._robust_accuracy(batch, iterative_adv, labels)
        return SanityItem(
            name="one_step_vs_iterative",
            passed=rob_one >= rob_many,
            values={"pgd1": rob_one, f"pgd{self.config.iterations}": rob_many},
        )

    def transfer(self, batch, labels, iterative_adv) -> SanityItem:
        if self.surrogate is None:
            return SanityItem(name="transfer", passed=None, note="no surrogate model")
        crafted = pgd(self.surrogate, self.loss, batch, labels, self._spec(), self.config.seed)
        rob_transfer = self._robust_accuracy(batch, crafted.adversarial, labels)
        rob_white_box = self._robust_accuracy(batch, iterative_adv, labels)
        return SanityItem(
            name="transfer",
            passed=rob_transfer >= rob_white_box,
            values={"transfer": rob_transfer, "white_box": rob_white_box},
        )

    def unbounded(self, batch, labels) -> SanityItem:
        spec = AttackSpec(
            eps=1.0,
            eps_low=1.0,
            alpha=self.config.unbounded_alpha,
            iterations=self.config.unbounded_iterations,
        )
        result = pgd(self.model, self.loss, batch, labels, spec, self.config.seed)
        rob = self._robust_accuracy(batch, result.adversarial, labels)
        return SanityItem(name="unbounded", passed=rob == 0.0, values={"robust_accuracy": rob})

    def random_sampling(self, batch, labels, iterative_adv) -> SanityItem:
        survivors = robust_correct(self.model, batch, iterative_adv, labels).nonzero().flatten()
        survivors = survivors[: self.config.max_survivors]
        if survivors.numel() == 0:
            return SanityItem(
                name="random_sampling", passed=True, values={"survivors": 0.0},
                note="no PGD survivors to sample around",
            )

        clean = 0
        for index in survivors.tolist():
            generator = image_generator(self.config.seed + 1, index)
            draws = torch.rand(
                (self.config.random_draws, *batch.shape[1:]), generator=generator,
                dtype=torch.float64,
            )
            noise = ((2 * draws - 1) * self.config.eps).to(batch.dtype)
            samples = (batch[index].unsqueeze(0) + noise).clamp(0, 1)
            if bool((predictions(self.model, samples) == labels[index]).all()):
                clean += 1
        fraction = clean / survivors.numel()
        return SanityItem(
            name="random_sampling",
            passed=fraction >= self.config.pass_fraction,
            values={"survivors": float(survivors.numel()), "no_adversarial_fraction": fraction},
        )

    def increasing_eps(self, batch, labels) -> SanityItem:
        accuracies = []
        for eps in self.config.sweep_eps:
            spec = AttackSpec(
                eps=eps, eps_low=eps, alpha=eps / 4, iterations=self.config.sweep_iterations
            )
            result = pgd(self.model, self.loss, batch, labels, spec, self.config.seed)
            accuracies.append(self._robust_accuracy(batch, result.adversarial, labels))
        monotone = all(later <= earlier for earlier, later in zip(accuracies, accuracies[1:]))
        return SanityItem(
            name="increasing_eps",
            passed=monotone,
            values={f"eps={eps * 255:g}/255": acc for eps, acc in zip(self.config.sweep_eps, accuracies)},
        )

    def _spec(self) -> AttackSpec:
        return AttackSpec(
            eps=self.config.eps,
            eps_low=self.config.eps,
            alpha=self.config.alpha,
            iterations=self.config.iterations,
        )

    def _robust_accuracy(self, batch, adversarial, labels) -> float:
        return float(robust_correct(self.model, batch, adversarial, labels).double().mean())


def sanity_suite(
    model: ModelBackend,
    batch: torch.Tensor,
    labels: torch.Tensor,
    surrogate: Optional[ModelBackend] = None,
    config: Optional[SanityConfig] = None,
) -> SanityReport:
    return SanitySuite(model, config, surrogate).run(batch, labels)


def _verdict(passed: Optional[bool]) -> str:
    if passed is None:
        return "skipped"
    return "pass" if passed else "FAIL"
