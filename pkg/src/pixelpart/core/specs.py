"""Attack and training configuration.

AttackSpec and TrainSpec are frozen pydantic models. Budgets may be given as
fraction literals ("8/255"); they are converted to floats once, at parse
time. Construction runs validate_spec, so an instance that exists satisfies
every invariant listed in _attack_violations / _train_violations.
"""

from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, List, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from ..base.exceptions import SpecValidationError

DEFAULT_EPS = 8 / 255
DEFAULT_EPS_LOW = 7 / 255
DEFAULT_ALPHA = 2 / 255
TRAIN_ITERATIONS = 10
EVAL_ITERATIONS = 20


def parse_fraction(value: Any) -> Any:
    """Convert "8/255"-style literals to float; leave other values untouched."""
    if isinstance(value, str):
        text = value.strip()
        try:
            return float(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a number or fraction: {value!r}") from exc
    return value


Real = Annotated[float, BeforeValidator(parse_fraction)]


class MaskMode(str, Enum):
    NONE = "none"
    PIXEL_AG = "pixel_ag"


class ProjectionMode(str, Enum):
    PER_STEP_MULTIPLY = "per_step_multiply"
    BOX_PROJECT = "box_project"


class Scaling(str, Enum):
    MINMAX = "minmax"
    MEAN = "mean"


class Method(str, Enum):
    AT = "AT"
    TRADES = "TRADES"
    MART = "MART"
    PART = "PART"
    PART_T = "PART_T"
    PART_M = "PART_M"

    @property
    def is_part(self) -> bool:
        return self in (Method.PART, Method.PART_T, Method.PART_M)

    @property
    def base(self) -> "Method":
        """The unweighted method a PART variant is built on."""
        return {
            Method.PART: Method.AT,
            Method.PART_T: Method.TRADES,
            Method.PART_M: Method.MART,
        }.get(self, self)


class AttackSpec(BaseModel):
    """Inner-maximization configuration.

    Attributes:
        eps: Budget for important pixels (pixel intensity units)
        eps_low: Budget for the remaining pixels, eps_low <= eps
        alpha: Signed-gradient step size
        iterations: Number of ascent steps K
        random_start: Start from a uniform draw inside the (masked) box
        mask_mode: "none" for plain PGD, "pixel_ag" for mask-reweighted PGD
        projection_mode: How the mask enters the projection step
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps: Real = DEFAULT_EPS
    eps_low: Real = DEFAULT_EPS_LOW
    alpha: Real = DEFAULT_ALPHA
    iterations: int = TRAIN_ITERATIONS
    random_start: bool = True
    mask_mode: MaskMode = MaskMode.NONE
    projection_mode: ProjectionMode = ProjectionMode.PER_STEP_MULTIPLY

    @model_validator(mode="after")
    def _check_invariants(self) -> "AttackSpec":
        return validate_spec(self)

    @property
    def low_ratio(self) -> float:
        return self.eps_low / self.eps


def default_eval_attack() -> AttackSpec:
    return AttackSpec(iterations=EVAL_ITERATIONS)


class TrainSpec(BaseModel):
    """Outer-minimization configuration.

    Defaults follow the CIFAR-10 recipe: SGD with momentum 0.9, lr 0.01
    divided by 10 at epoch 60 of 80, batch 128, weight decay 2e-4,
    lambda 6 for TRADES/MART and a 20-epoch burn-in.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    method: Method = Method.PART
    lambda_: Real = Field(default=6.0, alias="lambda")
    epochs: int = 80
    burn_in: int = 20
    mask_save_freq: int = 1
    learning_rate: Real = 0.01
    lr_decay_epoch: int = 60
    lr_decay_factor: Real = 10.0
    batch_size: int = 128
    weight_decay: Real = 2e-4
    momentum: Real = 0.9
    seed: int = 0
    attack: AttackSpec = Field(default_factory=AttackSpec)
    eval_attack: AttackSpec = Field(default_factory=default_eval_attack)
    cam_method: str = "gradcam"
    cam_layer: str = "conv2"
    scaling: Scaling = Scaling.MINMAX
    log_interval: int = 50
    checkpoint_every: int = 10

    @model_validator(mode="after")
    def _check_invariants(self) -> "TrainSpec":
        return validate_spec(self)

    def learning_rate_at(self, epoch: int) -> float:
        """Learning rate in effect during a 0-based epoch."""
        if epoch >= self.lr_decay_epoch:
            return self.learning_rate / self.lr_decay_factor
        return self.learning_rate


def _attack_violations(spec: AttackSpec) -> List[str]:
    violations = []
    if not spec.eps > 0:
        violations.append("eps <= 0")
    if not spec.eps_low > 0:
        violations.append("eps_low <= 0")
    if spec.eps_low > spec.eps:
        violations.append("eps_low > eps")
    if not spec.alpha > 0:
        violations.append("alpha <= 0")
    if spec.iterations < 1:
        violations.append("iterations < 1")
    return violations


def _train_violations(spec: TrainSpec) -> List[str]:
    violations = []
    if spec.epochs < 1:
        violations.append("epochs < 1")
    if spec.burn_in < 0:
        violations.append("burn_in < 0")
    if spec.burn_in > spec.epochs:
        violations.append("burn_in > epochs")
    if spec.mask_save_freq < 1:
        violations.append("mask_save_freq < 1")
    if spec.batch_size < 1:
        violations.append("batch_size < 1")
    if not spec.learning_rate > 0:
        violations.append("learning_rate <= 0")
    if not spec.lr_decay_factor > 0:
        violations.append("lr_decay_factor <= 0")
    if spec.lambda_ < 0:
        violations.append("lambda < 0")
    if spec.weight_decay < 0:
        violations.append("weight_decay < 0")
    if spec.log_interval < 1:
        violations.append("log_interval < 1")
    if spec.checkpoint_every < 1:
        violations.append("checkpoint_every < 1")
    return violations


AnySpec = Union[AttackSpec, TrainSpec]


def validate_spec(spec: AnySpec) -> AnySpec:
    """Return the spec unchanged if every invariant holds.

    Raises:
        SpecValidationError: naming the first violated invariant,
            e.g. "eps_low > eps".
    """
    if isinstance(spec, TrainSpec):
        violations = _train_violations(spec)
    elif isinstance(spec, AttackSpec):
        violations = _attack_violations(spec)
    else:
        raise TypeError(f"cannot validate {type(spec).__name__}")

    if violations:
        raise SpecValidationError(violations[0], all_violations=violations)
    return spec


def replace_spec(spec: AnySpec, **changes: Any) -> AnySpec:
    """Copy a spec with some fields changed, re-running validation."""
    data = spec.model_dump(by_alias=True)
    data.update(changes)
    return type(spec).model_validate(data)
