"""Comparison schemes: local processing only, offloading all, equal offloading
and UAV-only computing (no relay to the ground station)."""

from __future__ import annotations

import numpy as np

from .bsum import SolverConfig, SolverResult, _greedy_channels, bsum_solve, initial_feasible_point
from .costs import L_MIN, CostBreakdown, DecisionVector, evaluate
from .errors import Infeasible
from .scenario import Scenario


def local_only(s: Scenario) -> tuple[DecisionVector, CostBreakdown]:
    """Keep (almost) everything on the devices.

    The offloading ratio sits at its floor ``L_MIN``.  The residual sliver is
    relayed (phi = 1) over the initial channel assignment so that no UAV CPU
    is needed; deadline violations show up in the residuals, they are not
    raised.
    """
    U = s.num_devices
    x = DecisionVector(
        delta=_greedy_channels(s),
        l=np.full(U, L_MIN),
        f=np.zeros(U),
        phi=np.ones(U),
    )
    return x, evaluate(s, x)


def offload_all(
    s: Scenario, cfg: SolverConfig | None = None, *, strict: bool = True
) -> tuple[DecisionVector, CostBreakdown]:
    """Ship every task to the UAVs (l = 1); CPU shares and relay ratios are
    optimised with the channel assignment held at its initial value.

    With ``strict=False`` an infeasible configuration is returned as the
    plain l = 1 point (equal CPU split, everything relayed) instead of raising.
    """
    try:
        x0 = initial_feasible_point(s, l=1.0)
    except Infeasible:
        if strict:
            raise
        return _fallback(s, 1.0)
    res = bsum_solve(s, cfg, x0=x0, blocks=("f", "phi"))
    return res.x, res.costs


def equal_offloading(
    s: Scenario, *, strict: bool = True
) -> tuple[DecisionVector, CostBreakdown]:
    """Split every task in half (l = 0.5); channels, CPU and relay ratios come
    from the initial-point construction (smallest feasible phi)."""
    try:
        x = initial_feasible_point(s, l=0.5)
    except Infeasible:
        if strict:
            raise
        return _fallback(s, 0.5)
    return x, evaluate(s, x)


def uav_only(s: Scenario, cfg: SolverConfig | None = None) -> SolverResult:
    """Full optimisation with the relay ratio frozen at zero."""
    x0 = initial_feasible_point(s, phi=0.0)
    return bsum_solve(s, cfg, x0=x0, blocks=("delta", "l", "f"))


def _fallback(s: Scenario, l: float) -> tuple[DecisionVector, CostBreakdown]:
    owner = s.cluster_of
    counts = np.bincount(owner, minlength=s.num_uavs)
    x = DecisionVector(
        delta=_greedy_channels(s),
        l=np.full(s.num_devices, l),
        f=s.uav_cpu[owner] / counts[owner],
        phi=np.ones(s.num_devices),
    )
    return x, evaluate(s, x)
