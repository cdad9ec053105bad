import dataclasses as dc

import numpy as np
import pytest

from uavmec.baselines import equal_offloading, local_only, offload_all, uav_only
from uavmec.bsum import bsum_solve
from uavmec.costs import L_MIN, residuals
from uavmec.errors import Infeasible
from uavmec.scenario import generate_scenario

from conftest import make_scenario, tiny_params


@pytest.fixture(scope="module")
def loose():
    """Four devices with a generous deadline: every scheme is feasible."""
    return generate_scenario(tiny_params(3, 4, 2, 4, 1000.0))


def _local_energy(s):
    return s.input_bits * s.cycles_per_bit * s.energy.md_chip_k * s.local_cpu**2


def test_local_only_is_local_energy(loose):
    x, cb = local_only(loose)
    assert np.all(x.l == L_MIN)
    assert np.all(x.f == 0.0)
    assert cb.e_local.sum() == pytest.approx((1 - L_MIN) * _local_energy(loose).sum(), rel=1e-12)
    # the L_MIN sliver costs almost nothing
    assert cb.objective - cb.e_local.sum() < 1e-4 * cb.objective
    assert cb.e_edge.sum() == 0.0


def test_local_only_scales_with_input_size(loose):
    double = dc.replace(
        loose, devices=tuple(dc.replace(d, task=dc.replace(d.task, input_bits=2 * d.task.input_bits))
                             for d in loose.devices),
    )
    assert local_only(double)[1].e_local.sum() == pytest.approx(2 * local_only(loose)[1].e_local.sum())


def test_offload_all_has_no_local_energy(loose):
    x, cb = offload_all(loose)
    assert np.all(x.l == 1.0)
    assert np.all(cb.e_local == 0.0)
    assert cb.md_energy == pytest.approx(np.sum(loose.tx_power * cb.t_uplink), rel=1e-12)
    assert residuals(loose, x).feasible(1e-9)


def test_equal_offloading_halves_local_energy(loose):
    x, cb = equal_offloading(loose)
    assert np.all(x.l == 0.5)
    assert np.allclose(cb.e_local, 0.5 * _local_energy(loose), rtol=1e-12)
    assert residuals(loose, x).feasible(1e-9)


def test_equal_offloading_strictness():
    s = make_scenario([(0, 0, 0)], [(0, 0, 150)], [[0]], deadline=50.0)  # local half alone takes 100 s
    with pytest.raises(Infeasible):
        equal_offloading(s)
    x, _ = equal_offloading(s, strict=False)
    assert not residuals(s, x).feasible(1e-9)


def test_uav_only_never_relays(loose):
    res = uav_only(loose)
    assert np.all(res.x.phi == 0.0)
    assert res.costs.e_relay.sum() == 0.0
    assert residuals(loose, res.x).feasible(1e-9)


def test_proposed_dominates_feasible_baselines(loose):
    best = bsum_solve(loose).objective
    candidates = [local_only(loose), offload_all(loose), equal_offloading(loose)]
    restricted = uav_only(loose)
    candidates.append((restricted.x, restricted.costs))
    for x, cb in candidates:
        if residuals(loose, x).feasible(1e-9):
            assert best <= cb.objective * (1 + 1e-6)
