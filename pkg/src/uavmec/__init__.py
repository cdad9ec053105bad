"""Energy-minimal task offloading for multi-UAV edge computing with ground relay."""

from .bsum import SolverConfig, SolverResult, bsum_solve
from .costs import CostBreakdown, DecisionVector, evaluate, residuals
from .scenario import GenParams, Scenario, generate_scenario, preset

__all__ = [
    "CostBreakdown", "DecisionVector", "GenParams", "Scenario", "SolverConfig",
    "SolverResult", "bsum_solve", "evaluate", "generate_scenario", "preset", "residuals",
]
