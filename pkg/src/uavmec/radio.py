"""Deterministic path-loss link model for MD->UAV and UAV->TBS links."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateGeometry
from .scenario import Position3, RadioConfig, Scenario


def distance(a: Position3, b: Position3) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def channel_gain(radio: RadioConfig, d: float) -> float:
    """Free-space gain ``h0 / d**alpha`` (linear)."""
    if not d > 0:
        raise DegenerateGeometry(f"distance must be positive, got {d}")
    return radio.h0 / d**radio.alpha


def uplink_noise_w(radio: RadioConfig) -> float:
    if radio.noise_mode == "per_hz":
        return radio.n0_w * radio.subchannel_bw_hz
    return radio.n0_w


def relay_bandwidth_hz(radio: RadioConfig, num_uavs: int) -> float:
    return radio.relay_total_bw_hz / num_uavs


def relay_noise_w(radio: RadioConfig, num_uavs: int) -> float:
    if radio.noise_mode == "per_hz":
        return radio.n0_w * relay_bandwidth_hz(radio, num_uavs)
    return radio.n0_w


def rate_md_uav(radio: RadioConfig, sinr: float) -> float:
    return radio.subchannel_bw_hz * math.log2(1.0 + sinr)


def sinr_md_uav(s: Scenario, delta: np.ndarray, u: int, m: int, n: int) -> float:
    """SINR of device ``u`` at its UAV ``m`` on subchannel ``n``.

    Only devices attached to other UAVs interfere; fractional ``delta``
    entries weight their contribution.
    """
    radio = s.radio
    uav = s.uavs[m]
    own = s.devices[u]
    signal = own.uplink_tx_power_w * channel_gain(radio, distance(own.position, uav.position))
    interference = 0.0
    for other in s.devices:
        m_other = int(s.cluster_of[other.id])
        if other.id == u or m_other == m:
            continue
        weight = float(delta[other.id, n])
        if weight == 0.0:
            continue
        gain = channel_gain(radio, distance(other.position, uav.position))
        interference += weight * other.uplink_tx_power_w * gain
    return signal / (interference + uplink_noise_w(radio))


def rate_uav_tbs(s: Scenario, m: int) -> float:
    radio = s.radio
    uav = s.uavs[m]
    gain = channel_gain(radio, distance(uav.position, s.tbs_position))
    snr = uav.relay_tx_power_w * gain / relay_noise_w(radio, s.num_uavs)
    return relay_bandwidth_hz(radio, s.num_uavs) * math.log2(1.0 + snr)


# --------------------------------------------------------------------------
# vectorised forms used by the cost model and the solver


def gain_matrix(s: Scenario) -> np.ndarray:
    """``G[u, m]``: gain from device u to UAV m."""
    cache = s.__dict__.get("_gain_matrix")
    if cache is None:
        d = np.linalg.norm(s.md_xyz[:, None, :] - s.uav_xyz[None, :, :], axis=2)
        if np.any(d <= 0):
            raise DegenerateGeometry("a device coincides with a UAV")
        cache = s.radio.h0 / d**s.radio.alpha
        s.__dict__["_gain_matrix"] = cache
    return cache


def cross_power(s: Scenario) -> np.ndarray:
    """``A[u, m]``: power received at UAV m from device u when u is *not* m's member."""
    cache = s.__dict__.get("_cross_power")
    if cache is None:
        foreign = s.cluster_of[:, None] != np.arange(s.num_uavs)[None, :]
        cache = s.tx_power[:, None] * gain_matrix(s) * foreign
        s.__dict__["_cross_power"] = cache
    return cache


def own_power(s: Scenario) -> np.ndarray:
    """Received power of each device at its own UAV."""
    g = gain_matrix(s)[np.arange(s.num_devices), s.cluster_of]
    return s.tx_power * g


def interference(s: Scenario, delta: np.ndarray) -> np.ndarray:
    """``I[m, n]``: co-channel interference at UAV m on subchannel n."""
    return cross_power(s).T @ delta


def sinr_matrix(s: Scenario, delta: np.ndarray) -> np.ndarray:
    """``SINR[u, n]`` for every device at its own UAV."""
    interf = interference(s, delta)[s.cluster_of]
    return own_power(s)[:, None] / (interf + uplink_noise_w(s.radio))


def uplink_rates(s: Scenario, delta: np.ndarray) -> np.ndarray:
    return s.radio.subchannel_bw_hz * np.log2(1.0 + sinr_matrix(s, delta))


def relay_rates(s: Scenario) -> np.ndarray:
    cache = s.__dict__.get("_relay_rates")
    if cache is None:
        cache = np.array([rate_uav_tbs(s, m) for m in range(s.num_uavs)])
        s.__dict__["_relay_rates"] = cache
    return cache
