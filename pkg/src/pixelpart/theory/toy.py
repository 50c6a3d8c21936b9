"""Two-pixel linear attack problem and its KKT points.

For f(x) = w1 x1 + w2 x2 + b and residual r = y - f(x) the attacker solves

    maximize (r - w1 d1 - w2 d2)^2  subject to |d1| <= eps1, |d2| <= eps2.

Writing it as minimizing the negated loss, the Lagrangian is

    L = -(r - w.d)^2 + l1 (d1 - eps1) + l2 (-d1 - eps1)
                     + l3 (d2 - eps2) + l4 (-d2 - eps2)

and stationarity reads 2 w_k e + l_upper - l_lower = 0 with e = r - w.d.
Stationary points fall into three families: points on the zero-loss line
e = 0 (interior), the four box corners, and the four edge points where one
coordinate sits on its bound and the other solves e = 0 (mixed).
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..base.exceptions import SpecValidationError

FEASIBILITY_TOL = 1e-12
SLACKNESS_TOL = 1e-9
MIN_GRID_RESOLUTION = 101

Delta = Tuple[float, float]
Multipliers = Tuple[float, float, float, float]


@dataclass(frozen=True)
class ToyInstance:
    """A 2D data point, a linear model and per-pixel budgets."""

    w1: float
    w2: float
    b: float
    x1: float
    x2: float
    y: float
    eps1: float
    eps2: float

    def __post_init__(self):
        if not self.eps1 > 0:
            raise SpecValidationError("eps1 <= 0")
        if not self.eps2 > 0:
            raise SpecValidationError("eps2 <= 0")

    @property
    def residual(self) -> float:
        """r = y - f(x) at the unperturbed point."""
        return self.y - (self.w1 * self.x1 + self.w2 * self.x2 + self.b)

    def loss(self, delta1: float, delta2: float) -> float:
        return (self.residual - self.w1 * delta1 - self.w2 * delta2) ** 2

    def feasible(self, delta1: float, delta2: float) -> bool:
        return (
            abs(delta1) <= self.eps1 + FEASIBILITY_TOL
            and abs(delta2) <= self.eps2 + FEASIBILITY_TOL
        )


@dataclass(frozen=True)
class KKTCandidate:
    """A stationary point of the Lagrangian with its recovered multipliers."""

    delta1: float
    delta2: float
    case: str
    multipliers: Multipliers
    loss: float
    feasible: bool = True
    kkt_consistent: bool = True

    @property
    def delta(self) -> Delta:
        return (self.delta1, self.delta2)


@dataclass
class KKTEnumeration:
    """All emitted candidates plus notes on skipped or rejected cases."""

    all_candidates: List[KKTCandidate] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)

    @property
    def candidates(self) -> List[KKTCandidate]:
        return [c for c in self.all_candidates if c.feasible]


def kkt_analysis(inst: ToyInstance) -> KKTEnumeration:
    result = KKTEnumeration()
    _corners(inst, result)
    _mixed(inst, result)
    _interior(inst, result)
    return result


def enumerate_kkt(inst: ToyInstance) -> List[KKTCandidate]:
    """Feasible stationary points; see kkt_analysis for the rejected ones."""
    return kkt_analysis(inst).candidates


def _corners(inst: ToyInstance, result: KKTEnumeration) -> None:
    for s1, s2 in itertools.product((1, -1), repeat=2):
        d1, d2 = s1 * inst.eps1, s2 * inst.eps2
        e = inst.residual - inst.w1 * d1 - inst.w2 * d2
        l1, l2 = _bound_multipliers(s1, -2 * inst.w1 * e)
        l3, l4 = _bound_multipliers(s2, -2 * inst.w2 * e)
        multipliers = (l1, l2, l3, l4)
        consistent = min(multipliers) >= -_multiplier_tol(inst, e)
        tag = f"corner({_sign(s1)},{_sign(s2)})"
        if not consistent:
            result.diagnostics.append(f"{tag}: negative multiplier, KKT-inconsistent")
        result.all_candidates.append(
            KKTCandidate(d1, d2, tag, multipliers, inst.loss(d1, d2), True, consistent)
        )


def _bound_multipliers(sign: int, upper_minus_lower: float) -> Tuple[float, float]:
    """(upper, lower) multipliers when the coordinate sits on the given bound."""
    if sign > 0:
        return upper_minus_lower, 0.0
    return 0.0, -upper_minus_lower


def _mixed(inst: ToyInstance, result: KKTEnumeration) -> None:
    r = inst.residual
    for s1 in (1, -1):
        tag = f"mixed(d1={_sign(s1)}eps1)"
        if inst.w2 == 0:
            result.diagnostics.append(f"{tag}: skipped, w2 = 0")
            continue
        d1 = s1 * inst.eps1
        d2 = (r - inst.w1 * d1) / inst.w2
        _append_zero_loss(inst, result, d1, d2, tag)
    for s2 in (1, -1):
        tag = f"mixed(d2={_sign(s2)}eps2)"
        if inst.w1 == 0:
            result.diagnostics.append(f"{tag}: skipped, w1 = 0")
            continue
        d2 = s2 * inst.eps2
        d1 = (r - inst.w2 * d2) / inst.w1
        _append_zero_loss(inst, result, d1, d2, tag)


def _interior(inst: ToyInstance, result: KKTEnumeration) -> None:
    """Endpoints of the zero-loss segment {w.d = r} inside the box."""
    if inst.w1 == 0 and inst.w2 == 0:
        result.diagnostics.append("interior: skipped, w = 0")
        return
    endpoints = _segment_endpoints(inst)
    if not endpoints:
        result.diagnostics.append("interior: zero-loss line misses the box")
        return
    for d1, d2 in endpoints:
        _append_zero_loss(inst, result, d1, d2, "interior")


def _segment_endpoints(inst: ToyInstance) -> List[Delta]:
    r, w1, w2 = inst.residual, inst.w1, inst.w2
    points = []
    if w2 != 0:
        for d1 in (-inst.eps1, inst.eps1):
            points.append((d1, (r - w1 * d1) / w2))
    if w1 != 0:
        for d2 in (-inst.eps2, inst.eps2):
            points.append(((r - w2 * d2) / w1, d2))
    inside = sorted({p for p in points if inst.feasible(*p)})
    if not inside:
        return []
    return [inside[0], inside[-1]] if inside[0] != inside[-1] else [inside[0]]


def _append_zero_loss(
    inst: ToyInstance, result: KKTEnumeration, d1: float, d2: float, tag: str
) -> None:
    feasible = inst.feasible(d1, d2)
    if not feasible:
        result.diagnostics.append(f"{tag}: infeasible at ({d1:.6g}, {d2:.6g})")
    result.all_candidates.append(
        KKTCandidate(d1, d2, tag, (0.0, 0.0, 0.0, 0.0), inst.loss(d1, d2), feasible, True)
    )


def _multiplier_tol(inst: ToyInstance, e: float) -> float:
    return FEASIBILITY_TOL * max(1.0, abs(e), abs(inst.w1), abs(inst.w2))


def _sign(s: int) -> str:
    return "+" if s > 0 else "-"


def lagrangian_gradient(inst: ToyInstance, candidate: KKTCandidate) -> Delta:
    """(dL/dd1, dL/dd2) at a candidate with its recovered multipliers."""
    l1, l2, l3, l4 = candidate.multipliers
    e = inst.residual - inst.w1 * candidate.delta1 - inst.w2 * candidate.delta2
    return (2 * inst.w1 * e + l1 - l2, 2 * inst.w2 * e + l3 - l4)


def slackness_residuals(inst: ToyInstance, candidate: KKTCandidate) -> Multipliers:
    l1, l2, l3, l4 = candidate.multipliers
    d1, d2 = candidate.delta
    return (
        l1 * (d1 - inst.eps1),
        l2 * (-d1 - inst.eps1),
        l3 * (d2 - inst.eps2),
        l4 * (-d2 - inst.eps2),
    )


def solve_toy_attack(inst: ToyInstance) -> Tuple[Delta, float]:
    """Largest-loss feasible, KKT-consistent candidate.

    Ties (equal loss up to rounding) go to the lexicographically smallest
    (d1, d2).
    """
    pool = [c for c in enumerate_kkt(inst) if c.kkt_consistent]
    best_loss = max(c.loss for c in pool)
    tol = FEASIBILITY_TOL * max(1.0, best_loss)
    winners = [c for c in pool if c.loss >= best_loss - tol]
    best = min(winners, key=lambda c: c.delta)
    return best.delta, best.loss


def grid_oracle(inst: ToyInstance, resolution: int = 401) -> Tuple[Delta, float]:
    """Exhaustive search over a uniform grid that contains the corners."""
    if resolution < MIN_GRID_RESOLUTION:
        raise SpecValidationError(
            "resolution < 101", f"grid resolution must be >= {MIN_GRID_RESOLUTION}"
        )
    d1 = np.linspace(-inst.eps1, inst.eps1, resolution)
    d2 = np.linspace(-inst.eps2, inst.eps2, resolution)
    grid1, grid2 = np.meshgrid(d1, d2, indexing="ij")
    losses = (inst.residual - inst.w1 * grid1 - inst.w2 * grid2) ** 2
    i, j = np.unravel_index(int(np.argmax(losses)), losses.shape)
    return (float(d1[i]), float(d2[j])), float(losses[i, j])


@dataclass(frozen=True)
class BudgetSplit:
    eps1: float
    eps2: float
    loss: float


@dataclass(frozen=True)
class BudgetEffectReport:
    """Maximal attack loss for each split of a fixed total budget.

    favours_larger_weight is None when |w1| = |w2|; otherwise it says whether
    the best split gives strictly more budget to the pixel with larger |w|.
    """

    total: float
    splits: Tuple[BudgetSplit, ...]
    best: BudgetSplit
    favours_larger_weight: Optional[bool]
    constant: bool


def unequal_budget_effect(
    inst: ToyInstance, total: Optional[float] = None, num_splits: int = 11
) -> BudgetEffectReport:
    """Sweep eps1 over [0, total] in num_splits steps with eps2 = total - eps1.

    Splits that give one pixel no budget are solved as one-dimensional
    problems over the corners of the degenerate box.
    """
    if num_splits < 2:
        raise SpecValidationError("num_splits < 2")
    total = inst.eps1 + inst.eps2 if total is None else total
    if not total > 0:
        raise SpecValidationError("total budget <= 0")

    splits = []
    for eps1 in np.linspace(0.0, total, num_splits):
        eps1 = float(eps1)
        eps2 = max(total - eps1, 0.0)
        splits.append(BudgetSplit(eps1, eps2, _max_loss(inst, eps1, eps2)))

    best_loss = max(s.loss for s in splits)
    tol = FEASIBILITY_TOL * max(1.0, best_loss)
    best = next(s for s in splits if s.loss >= best_loss - tol)
    constant = all(math.isclose(s.loss, best_loss, rel_tol=1e-9, abs_tol=1e-12) for s in splits)

    if abs(inst.w1) == abs(inst.w2):
        favours = None
    elif abs(inst.w1) > abs(inst.w2):
        favours = best.eps1 > best.eps2
    else:
        favours = best.eps2 > best.eps1
    return BudgetEffectReport(total, tuple(splits), best, favours, constant)


def _max_loss(inst: ToyInstance, eps1: float, eps2: float) -> float:
    if eps1 > 0 and eps2 > 0:
        split = ToyInstance(inst.w1, inst.w2, inst.b, inst.x1, inst.x2, inst.y, eps1, eps2)
        return solve_toy_attack(split)[1]
    return max(
        inst.loss(s1 * eps1, s2 * eps2) for s1, s2 in itertools.product((1, -1), repeat=2)
    )
