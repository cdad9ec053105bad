"""Exhaustive grid search for tiny instances.

The search is exact over the product grid: for a fixed channel assignment and
CPU split, each device contributes a table of (hover time, energy) pairs over
its (l, phi) grid, and a UAV's best hover threshold is found by scanning every
candidate time with prefix minima.  The cost formulas are written out here
rather than taken from :mod:`uavmec.costs`, so the two can cross-check each
other; the winner is re-evaluated by ``costs.evaluate`` before returning.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import radio
from .costs import L_MIN, DecisionVector, evaluate, hover_powers, residuals
from .errors import InstanceTooLarge, NoFeasiblePoint
from .scenario import Scenario

_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class OracleConfig:
    grid_step: float = 0.05
    max_devices: int = 3
    max_uavs: int = 2
    max_subchannels: int = 3

    def __post_init__(self) -> None:
        if not 0 < self.grid_step <= 0.5:
            raise ValueError("grid_step must lie in (0, 0.5]")

    def grid(self) -> np.ndarray:
        n = int(round(1.0 / self.grid_step))
        if abs(n * self.grid_step - 1.0) < 1e-9:
            return np.linspace(0.0, 1.0, n + 1)
        return np.append(np.arange(0.0, 1.0, self.grid_step), 1.0)


def _check_size(s: Scenario, cfg: OracleConfig) -> None:
    if (
        s.num_devices > cfg.max_devices
        or s.num_uavs > cfg.max_uavs
        or s.num_subchannels > cfg.max_subchannels
    ):
        raise InstanceTooLarge(
            f"oracle limited to {cfg.max_devices} devices, {cfg.max_uavs} UAVs, "
            f"{cfg.max_subchannels} subchannels; got {s.num_devices}/{s.num_uavs}/{s.num_subchannels}"
        )


def _cpu_splits(n_members: int, grid: np.ndarray) -> list[tuple[float, ...]]:
    return [c for c in itertools.product(grid, repeat=n_members) if sum(c) <= 1.0 + 1e-12]


def _device_table(s: Scenario, u: int, rate: float, f_hz: float, L, PHI):
    """Hover-time and energy of device u over the (l, phi) mesh; infeasible
    cells get infinite time."""
    bits, cpb, floc, T = s.input_bits[u], s.cycles_per_bit[u], s.local_cpu[u], s.deadline[u]
    m = s.cluster_of[u]
    k, k2 = s.energy.md_chip_k, s.energy.uav_chip_k
    t_loc = (1 - L) * bits * cpb / floc
    e_loc = (1 - L) * bits * cpb * k * floc**2
    t_up = L * bits / rate
    e_up = s.tx_power[u] * t_up
    cycles = (1 - PHI) * L * bits * cpb
    with np.errstate(divide="ignore", invalid="ignore"):
        t_edge = np.where(cycles > 0, cycles / f_hz if f_hz > 0 else np.inf, 0.0)
    e_edge = cycles * k2 * f_hz**2
    r0 = radio.relay_rates(s)[m]
    t_rel = PHI * L * bits / r0
    e_rel = s.relay_power[m] * t_rel
    h = t_up + np.maximum(t_edge, t_rel)
    ok = T - np.maximum(t_loc, h) >= -_FEAS_TOL * T
    return np.where(ok, h, np.inf).ravel(), (e_loc + e_up + e_edge + e_rel).ravel()


def _best_threshold(tables, p_hov: float):
    """min over H of p_hov*H + sum_u min{g_u : h_u <= H}; returns (value, cell per member)."""
    prepared = []
    for h, g in tables:
        order = np.argsort(h, kind="stable")
        hs, gs = h[order], g[order]
        run = np.minimum.accumulate(gs)
        arg = np.zeros(gs.size, dtype=int)
        for i in range(1, gs.size):
            arg[i] = i if gs[i] < run[i - 1] else arg[i - 1]
        prepared.append((hs, run, order[arg]))
    candidates = np.unique(np.concatenate([p[0][np.isfinite(p[0])] for p in prepared]))
    best = (np.inf, None)
    for H in candidates:
        total, cells = p_hov * H, []
        for hs, run, cell in prepared:
            j = np.searchsorted(hs, H, side="right") - 1
            if j < 0:
                break
            total += run[j]
            cells.append(int(cell[j]))
        else:
            if total < best[0]:
                best = (total, cells)
    return best


def brute_force_solve(
    s: Scenario, cfg: OracleConfig | None = None
) -> tuple[DecisionVector, float]:
    cfg = cfg or OracleConfig()
    _check_size(s, cfg)
    U, N, M = s.num_devices, s.num_subchannels, s.num_uavs
    grid = cfg.grid()
    l_grid = grid.copy()
    l_grid[0] = L_MIN
    L, PHI = np.meshgrid(l_grid, grid, indexing="ij")
    p_hov = hover_powers(s)

    best_value, best_x = np.inf, None
    # a device without a subchannel cannot offload, and l > 0, so only
    # one-hot rows can be feasible
    for channels in itertools.product(range(N), repeat=U):
        delta = np.zeros((U, N))
        delta[np.arange(U), channels] = 1.0
        rates = radio.uplink_rates(s, delta)[np.arange(U), channels]
        total, l, f, phi = 0.0, np.zeros(U), np.zeros(U), np.zeros(U)
        for m in range(M):
            members = s.members[m]
            if members.size == 0:
                continue
            cluster_best = (np.inf, None, None)
            for split in _cpu_splits(members.size, grid):
                tables = [
                    _device_table(s, u, rates[u], frac * s.uav_cpu[m], L, PHI)
                    for u, frac in zip(members, split)
                ]
                value, cells = _best_threshold(tables, p_hov[m])
                if value < cluster_best[0]:
                    cluster_best = (value, split, cells)
            if cluster_best[1] is None:
                total = np.inf
                break
            total += cluster_best[0]
            for u, frac, cell in zip(members, cluster_best[1], cluster_best[2]):
                i, j = np.unravel_index(cell, L.shape)
                l[u], phi[u], f[u] = l_grid[i], grid[j], frac * s.uav_cpu[m]
        if total < best_value:
            best_value, best_x = total, DecisionVector(delta, l, f, phi)

    if best_x is None:
        raise NoFeasiblePoint("no grid point satisfies the constraints")
    if not residuals(s, best_x).feasible(_FEAS_TOL):
        raise AssertionError("oracle winner fails the constraint check")
    return best_x, evaluate(s, best_x).objective
