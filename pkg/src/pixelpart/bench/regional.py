"""Quadrant budgets: one l-infinity budget per image quarter.

Quadrants split rows at H // 2 and columns at W // 2, so for odd sizes the
extra row joins the bottom quadrants and the extra column the right ones.
"""

from typing import Tuple

import torch
from pydantic import BaseModel, ConfigDict, model_validator

from ..base.exceptions import SpecValidationError
from ..core.specs import Real
from ..core.tensors import BudgetMask


class RegionalBudget(BaseModel):
    """Budgets of the upper-left, upper-right, bottom-left and bottom-right quadrants."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ul: Real
    ur: Real
    bl: Real
    br: Real

    @model_validator(mode="after")
    def _check_positive(self) -> "RegionalBudget":
        for name in ("ul", "ur", "bl", "br"):
            if not getattr(self, name) > 0:
                raise SpecValidationError(f"{name} <= 0")
        return self

    @property
    def budgets(self) -> Tuple[float, float, float, float]:
        return (self.ul, self.ur, self.bl, self.br)

    def rotated(self, quarter_turns: int = 1) -> "RegionalBudget":
        """Budgets after rotating the image clockwise by quarter turns."""
        ul, ur, bl, br = self.budgets
        for _ in range(quarter_turns % 4):
            ul, ur, br, bl = bl, ul, ur, br
        return RegionalBudget(ul=ul, ur=ur, bl=bl, br=br)

    def label(self) -> str:
        return "/".join(f"{value * 255:g}" for value in self.budgets)


def quadrant_bounds(height: int, width: int) -> Tuple[int, int]:
    return height // 2, width // 2


def quadrant_mask(
    budget: RegionalBudget,
    height: int,
    width: int,
    eps_ref: float,
    dtype: torch.dtype = torch.float32,
) -> BudgetMask:
    """Mask with multiplier eps_q / eps_ref on quadrant q.

    Raises:
        SpecValidationError: If any quadrant budget exceeds eps_ref.
    """
    if height < 2 or width < 2:
        raise SpecValidationError("image too small for quadrants")
    if max(budget.budgets) > eps_ref:
        raise SpecValidationError("quadrant budget > eps_ref")

    row, col = quadrant_bounds(height, width)
    m = torch.empty((height, width), dtype=torch.float64)
    m[:row, :col] = budget.ul / eps_ref
    m[:row, col:] = budget.ur / eps_ref
    m[row:, :col] = budget.bl / eps_ref
    m[row:, col:] = budget.br / eps_ref
    return BudgetMask(m.to(dtype), eps_ref, min(budget.budgets), source="regional")
