"""Delay and energy accounting, the system objective, and constraint residuals."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import radio
from .errors import DimensionMismatch, ZeroCpuWithLoad, ZeroRateWithLoad
from .scenario import MobileDevice, Scenario, Uav

#: Smallest admissible offloading ratio; the model requires l > 0.
L_MIN = 1e-6


def _ratio(load: float, throughput: float, exc: type[Exception], what: str) -> float:
    # zero load costs nothing whatever the throughput
    if load == 0:
        return 0.0
    if throughput <= 0:
        raise exc(f"{what}: positive load {load} with throughput {throughput}")
    return load / throughput


def local_cost(dev: MobileDevice, l: float, k: float = 1e-28) -> tuple[float, float]:
    cycles = (1.0 - l) * dev.task.input_bits * dev.task.cycles_per_bit
    return cycles / dev.local_cpu_hz, cycles * k * dev.local_cpu_hz**2


def uplink_cost(dev: MobileDevice, l: float, rate: float) -> tuple[float, float]:
    t = _ratio(l * dev.task.input_bits, rate, ZeroRateWithLoad, "uplink")
    return t, dev.uplink_tx_power_w * t


def uav_compute_cost(
    dev: MobileDevice, l: float, phi: float, f_share: float, k_uav: float = 1e-28
) -> tuple[float, float]:
    cycles = (1.0 - phi) * l * dev.task.input_bits * dev.task.cycles_per_bit
    t = _ratio(cycles, f_share, ZeroCpuWithLoad, "edge compute")
    return t, cycles * k_uav * f_share**2


def relay_cost(
    dev: MobileDevice, l: float, phi: float, relay_rate: float, p_m0: float
) -> tuple[float, float]:
    t = _ratio(phi * l * dev.task.input_bits, relay_rate, ZeroRateWithLoad, "relay")
    return t, p_m0 * t


def hover_power(uav: Uav, rho: float) -> float:
    zeta = uav.thrust_n
    disc = 0.5 * math.pi * uav.rotor_count * uav.rotor_diameter_m**2 * rho
    return zeta * math.sqrt(zeta) / (uav.power_efficiency * math.sqrt(disc))


def hover_cost(
    uav: Uav, rho: float, member_times: list[tuple[float, float, float]]
) -> tuple[float, float, float]:
    """Hover time, power and energy for one UAV.

    ``member_times`` holds ``(t_uplink, t_edge, t_relay)`` per served device.
    """
    t_hov = max((up + max(edge, rel) for up, edge, rel in member_times), default=0.0)
    p_hov = hover_power(uav, rho)
    return t_hov, p_hov, p_hov * t_hov


# --------------------------------------------------------------------------
# whole-system evaluation


@dataclass(frozen=True)
class DecisionVector:
    """Channel assignment ``delta`` (U x N), offload ratios ``l``, UAV CPU
    shares ``f`` in Hz and relay ratios ``phi``; all arrays indexed by device id."""

    delta: np.ndarray
    l: np.ndarray
    f: np.ndarray
    phi: np.ndarray

    def copy(self) -> DecisionVector:
        return DecisionVector(self.delta.copy(), self.l.copy(), self.f.copy(), self.phi.copy())

    def with_(self, **blocks: np.ndarray) -> DecisionVector:
        return replace(self, **blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionVector):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("delta", "l", "f", "phi")
        )


@dataclass(frozen=True)
class CostBreakdown:
    # per device
    t_local: np.ndarray
    e_local: np.ndarray
    t_off: np.ndarray  # (U, N): time to ship l*I bits on each subchannel
    t_uplink: np.ndarray  # delta-weighted sum of t_off
    e_off: np.ndarray  # delta-weighted uplink energy
    t_edge: np.ndarray
    e_edge: np.ndarray
    t_relay: np.ndarray
    e_relay: np.ndarray
    t_total: np.ndarray
    e_total: np.ndarray
    # per UAV
    t_hov: np.ndarray
    p_hov: np.ndarray
    e_hov: np.ndarray
    uav_e_total: np.ndarray
    objective: float

    @property
    def md_energy(self) -> float:
        return float(self.e_total.sum())

    @property
    def uav_energy(self) -> float:
        return float(self.uav_e_total.sum())

    @property
    def hover_energy(self) -> float:
        return float(self.e_hov.sum())

    @property
    def smooth_energy(self) -> float:
        """Objective without the hover term (summed directly, not by subtraction)."""
        return float(self.e_total.sum() + self.e_edge.sum() + self.e_relay.sum())


def hover_powers(s: Scenario) -> np.ndarray:
    return np.array([hover_power(m, s.energy.air_density) for m in s.uavs])


def check_dimensions(s: Scenario, x: DecisionVector) -> None:
    U, N = s.num_devices, s.num_subchannels
    if x.delta.shape != (U, N):
        raise DimensionMismatch(f"delta has shape {x.delta.shape}, expected {(U, N)}")
    for name in ("l", "f", "phi"):
        if getattr(x, name).shape != (U,):
            raise DimensionMismatch(f"{name} has shape {getattr(x, name).shape}, expected {(U,)}")


def _safe_div(load: np.ndarray, rate: np.ndarray, exc: type[Exception], what: str) -> np.ndarray:
    out = np.zeros(np.broadcast(load, rate).shape)
    load_b = np.broadcast_to(load, out.shape)
    rate_b = np.broadcast_to(rate, out.shape)
    busy = load_b != 0
    if np.any(busy & (rate_b <= 0)):
        raise exc(f"{what}: positive load with zero throughput")
    out[busy] = load_b[busy] / rate_b[busy]
    return out


def evaluate(s: Scenario, x: DecisionVector) -> CostBreakdown:
    check_dimensions(s, x)
    k, k_uav = s.energy.md_chip_k, s.energy.uav_chip_k
    bits, cpb, f_loc = s.input_bits, s.cycles_per_bit, s.local_cpu
    owner = s.cluster_of

    local_cycles = (1.0 - x.l) * bits * cpb
    t_local = local_cycles / f_loc
    e_local = local_cycles * k * f_loc**2

    rates = radio.uplink_rates(s, x.delta)
    t_off = _safe_div((x.l * bits)[:, None], rates, ZeroRateWithLoad, "uplink")
    weighted = np.where(x.delta != 0, x.delta * t_off, 0.0)
    t_uplink = weighted.sum(axis=1)
    e_off = s.tx_power * t_uplink

    edge_cycles = (1.0 - x.phi) * x.l * bits * cpb
    t_edge = _safe_div(edge_cycles, x.f, ZeroCpuWithLoad, "edge compute")
    e_edge = edge_cycles * k_uav * x.f**2

    r0 = radio.relay_rates(s)[owner]
    t_relay = _safe_div(x.phi * x.l * bits, r0, ZeroRateWithLoad, "relay")
    e_relay = s.relay_power[owner] * t_relay

    remote = t_uplink + np.maximum(t_edge, t_relay)
    t_total = np.maximum(t_local, remote)
    e_total = e_local + e_off

    M = s.num_uavs
    t_hov = np.zeros(M)
    np.maximum.at(t_hov, owner, remote)
    p_hov = hover_powers(s)
    e_hov = p_hov * t_hov
    uav_e_total = e_hov + np.bincount(owner, weights=e_edge + e_relay, minlength=M)

    objective = float(e_total.sum() + uav_e_total.sum())
    return CostBreakdown(
        t_local, e_local, t_off, t_uplink, e_off, t_edge, e_edge, t_relay, e_relay,
        t_total, e_total, t_hov, p_hov, e_hov, uav_e_total, objective,
    )


# --------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class ConstraintResiduals:
    """Signed slack of every constraint; a point is feasible iff all are >= 0.

    ``channel`` is ``sum_n delta - 1``: a device that offloads (l > 0 always)
    must hold a subchannel, so together with ``row_sum`` rows sum to one.
    """

    deadline: np.ndarray  # T - t_total, per device
    cpu: np.ndarray  # f_max - sum f, per UAV
    row_sum: np.ndarray  # 1 - sum_n delta, per device
    channel: np.ndarray  # sum_n delta - 1, per device
    box_delta: np.ndarray
    box_l: np.ndarray
    box_f: np.ndarray
    box_phi: np.ndarray
    deadline_scale: np.ndarray
    cpu_scale: np.ndarray

    def normalized(self) -> dict[str, np.ndarray]:
        return {
            "deadline": self.deadline / self.deadline_scale,
            "cpu": self.cpu / self.cpu_scale,
            "row_sum": self.row_sum,
            "channel": self.channel,
            "box_delta": self.box_delta,
            "box_l": self.box_l,
            "box_f": self.box_f / self.cpu_scale.max(initial=1.0),
            "box_phi": self.box_phi,
        }

    def violations(self, tol: float = 1e-9) -> dict[str, np.ndarray]:
        """Indices of entries below ``-tol`` (relative to each constraint's scale)."""
        return {
            name: np.flatnonzero(v < -tol)
            for name, v in self.normalized().items()
            if np.any(v < -tol)
        }

    def feasible(self, tol: float = 1e-9, *, ignore: tuple[str, ...] = ()) -> bool:
        return not any(k not in ignore for k in self.violations(tol))

    def min_slack(self) -> float:
        return min(float(v.min(initial=np.inf)) for v in self.normalized().values())


def residuals(s: Scenario, x: DecisionVector) -> ConstraintResiduals:
    cb = evaluate(s, x)
    rows = x.delta.sum(axis=1)
    used = np.bincount(s.cluster_of, weights=x.f, minlength=s.num_uavs)
    return ConstraintResiduals(
        deadline=s.deadline - cb.t_total,
        cpu=s.uav_cpu - used,
        row_sum=1.0 - rows,
        channel=rows - 1.0,
        box_delta=np.minimum(x.delta, 1.0 - x.delta).min(axis=1, initial=np.inf),
        box_l=np.minimum(x.l - L_MIN, 1.0 - x.l),
        box_f=x.f.copy(),
        box_phi=np.minimum(x.phi, 1.0 - x.phi),
        deadline_scale=s.deadline.copy(),
        cpu_scale=s.uav_cpu.copy(),
    )


def deadline_split(s: Scenario, x: DecisionVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The completion-time max expanded into three slack vectors
    (local, uplink + edge, uplink + relay)."""
    cb = evaluate(s, x)
    T = s.deadline
    return T - cb.t_local, T - (cb.t_uplink + cb.t_edge), T - (cb.t_uplink + cb.t_relay)
