from __future__ import annotations

import dataclasses as dc

import numpy as np
import pytest

from uavmec.scenario import (
    Clustering,
    EnergyConfig,
    MobileDevice,
    Position3,
    RadioConfig,
    Scenario,
    TaskSpec,
    Uav,
    generate_scenario,
    preset,
)


def make_scenario(
    md_xyz,
    uav_xyz,
    clusters,
    *,
    bits=2e8,
    cpb=1000.0,
    f_loc=1e9,
    deadline=1e4,
    tx_power=1e-3,
    uav_cpu=2e9,
    relay_power=1.0,
    num_subchannels=1,
    tbs=(0.0, 0.0, 0.0),
    radio: RadioConfig | None = None,
    energy: EnergyConfig | None = None,
) -> Scenario:
    """Hand-built scenario; scalar device/UAV attributes broadcast to all."""
    U, M = len(md_xyz), len(uav_xyz)
    per_md = lambda v: np.broadcast_to(np.asarray(v, dtype=float), (U,))  # noqa: E731
    per_uav = lambda v: np.broadcast_to(np.asarray(v, dtype=float), (M,))  # noqa: E731
    bits, cpb, f_loc, deadline, tx_power = map(per_md, (bits, cpb, f_loc, deadline, tx_power))
    uav_cpu, relay_power = map(per_uav, (uav_cpu, relay_power))
    devices = tuple(
        MobileDevice(
            i, Position3(*md_xyz[i]), TaskSpec(float(bits[i]), float(cpb[i]), float(deadline[i])),
            float(f_loc[i]), float(tx_power[i]),
        )
        for i in range(U)
    )
    uavs = tuple(
        Uav(j, Position3(*uav_xyz[j]), float(uav_cpu[j]), float(relay_power[j]), 0.7, 30.0, 4, 0.254)
        for j in range(M)
    )
    radio = radio or RadioConfig(num_subchannels=num_subchannels)
    return Scenario(
        devices, uavs, Position3(*tbs), radio, energy or EnergyConfig(),
        Clustering({j: tuple(c) for j, c in enumerate(clusters)}),
    )


def tiny_params(seed: int, U: int, M: int, N: int, T: float):
    p = preset("rescaled")
    return dc.replace(
        p, seed=seed, num_devices=U, num_uavs=M,
        radio=dc.replace(p.radio, num_subchannels=N),
        device=dc.replace(p.device, deadline_min_s=T, deadline_max_s=T),
    )


@pytest.fixture(scope="session")
def default_scenario() -> Scenario:
    return generate_scenario(preset("rescaled"))


@pytest.fixture
def micro() -> Scenario:
    """One device 150 m below its UAV; the TBS sits at the device's location."""
    return make_scenario([(0.0, 0.0, 0.0)], [(0.0, 0.0, 150.0)], [[0]])


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
