"""Two-pixel linear attack analysis: KKT enumeration and a grid oracle."""

from .toy import (
    BudgetEffectReport,
    BudgetSplit,
    KKTCandidate,
    KKTEnumeration,
    ToyInstance,
    enumerate_kkt,
    grid_oracle,
    kkt_analysis,
    lagrangian_gradient,
    slackness_residuals,
    solve_toy_attack,
    unequal_budget_effect,
)

__all__ = [
    "ToyInstance",
    "KKTCandidate",
    "KKTEnumeration",
    "kkt_analysis",
    "enumerate_kkt",
    "lagrangian_gradient",
    "slackness_residuals",
    "solve_toy_attack",
    "grid_oracle",
    "BudgetSplit",
    "BudgetEffectReport",
    "unequal_budget_effect",
]
