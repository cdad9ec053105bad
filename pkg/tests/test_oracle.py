import itertools

import numpy as np
import pytest

from uavmec import costs, radio
from uavmec.costs import L_MIN, residuals
from uavmec.errors import InstanceTooLarge, NoFeasiblePoint
from uavmec.oracle import OracleConfig, brute_force_solve
from uavmec.scenario import generate_scenario

from conftest import make_scenario, tiny_params


def _hand_scan(s, step):
    """Triple loop over (l, phi, CPU share) with the scalar cost functions."""
    d, uav = s.devices[0], s.uavs[0]
    grid = np.append(np.arange(0.0, 1.0, step), 1.0)
    rate = radio.rate_md_uav(s.radio, radio.sinr_md_uav(s, np.ones((1, 1)), 0, 0, 0))
    r0 = radio.rate_uav_tbs(s, 0)
    p_hov = costs.hover_power(uav, s.energy.air_density)
    best = np.inf
    for l, phi, share in itertools.product(grid, grid, grid):
        l = max(l, L_MIN)
        f = share * uav.max_cpu_hz
        if (1 - phi) * l > 0 and f == 0:
            continue
        t_loc, e_loc = costs.local_cost(d, l)
        t_up, e_up = costs.uplink_cost(d, l, rate)
        t_e, e_e = costs.uav_compute_cost(d, l, phi, f)
        t_r, e_r = costs.relay_cost(d, l, phi, r0, uav.relay_tx_power_w)
        hover = t_up + max(t_e, t_r)
        if max(t_loc, hover) > d.task.deadline_s * (1 + 1e-9):
            continue
        best = min(best, e_loc + e_up + e_e + e_r + p_hov * hover)
    return best


@pytest.mark.parametrize("deadline", [150.0, 400.0])
def test_single_device_matches_hand_scan(deadline):
    s = make_scenario([(20, 0, 0)], [(0, 0, 150)], [[0]], deadline=deadline, tbs=(200, 0, 0))
    x, value = brute_force_solve(s, OracleConfig(grid_step=0.1))
    assert value == pytest.approx(_hand_scan(s, 0.1), rel=1e-12)
    assert residuals(s, x).feasible(1e-9)


def test_finer_grid_never_worse():
    s = generate_scenario(tiny_params(2, 2, 1, 2, 250.0))
    _, coarse = brute_force_solve(s, OracleConfig(grid_step=0.1))
    _, fine = brute_force_solve(s, OracleConfig(grid_step=0.05))  # nested grid
    assert fine <= coarse * (1 + 1e-12)


def test_winner_is_feasible_and_one_hot():
    s = generate_scenario(tiny_params(0, 2, 2, 2, 300.0))
    x, value = brute_force_solve(s)
    assert residuals(s, x).feasible(1e-9)
    assert np.all(x.delta.sum(axis=1) == 1.0)
    assert value > 0


def test_no_feasible_point():
    s = make_scenario([(0, 0, 0)], [(0, 0, 150)], [[0]], deadline=1.0)
    with pytest.raises(NoFeasiblePoint):
        brute_force_solve(s)


def test_instance_too_large(default_scenario):
    with pytest.raises(InstanceTooLarge):
        brute_force_solve(default_scenario)


def test_grid_validation():
    assert np.allclose(OracleConfig(grid_step=0.25).grid(), [0, 0.25, 0.5, 0.75, 1.0])
    assert OracleConfig(grid_step=0.3).grid()[-1] == 1.0
    with pytest.raises(ValueError):
        OracleConfig(grid_step=0.0)
