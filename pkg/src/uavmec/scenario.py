"""World construction: devices, UAVs, k-means association and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptyScenario, InvalidRange, TooFewPoints


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class TaskSpec:
    input_bits: float
    cycles_per_bit: float
    deadline_s: float


@dataclass(frozen=True)
class MobileDevice:
    id: int
    position: Position3
    task: TaskSpec
    local_cpu_hz: float
    uplink_tx_power_w: float


@dataclass(frozen=True)
class Uav:
    id: int
    position: Position3
    max_cpu_hz: float
    relay_tx_power_w: float
    power_efficiency: float
    thrust_n: float
    rotor_count: int
    rotor_diameter_m: float


@dataclass(frozen=True)
class RadioConfig:
    """Link-budget constants.

    ``n0_w`` is read according to ``noise_mode``: ``"per_subchannel"`` means
    total noise power in watts on any link, ``"per_hz"`` means a density in
    W/Hz that is multiplied by the link bandwidth.
    """

    h0: float = 1e-5
    alpha: float = 2.0
    n0_w: float = 1e-20
    subchannel_bw_hz: float = 180e3
    num_subchannels: int = 30
    relay_total_bw_hz: float = 20e6
    noise_mode: str = "per_subchannel"


@dataclass(frozen=True)
class EnergyConfig:
    md_chip_k: float = 1e-28
    uav_chip_k: float = 1e-28
    air_density: float = 1.225


@dataclass(frozen=True)
class Clustering:
    assignment: dict[int, tuple[int, ...]]

    def cluster_of(self, md_id: int) -> int:
        for uav_id, members in self.assignment.items():
            if md_id in members:
                return uav_id
        raise KeyError(md_id)


@dataclass(frozen=True)
class Scenario:
    devices: tuple[MobileDevice, ...]
    uavs: tuple[Uav, ...]
    tbs_position: Position3
    radio: RadioConfig
    energy: EnergyConfig
    clustering: Clustering

    @property
    def num_devices(self) -> int:
        return len(self.devices)

    @property
    def num_uavs(self) -> int:
        return len(self.uavs)

    @property
    def num_subchannels(self) -> int:
        return self.radio.num_subchannels

    # Array views used by the vectorised cost code.  Frozen dataclasses still
    # allow cached_property because it writes straight into __dict__.

    @cached_property
    def md_xyz(self) -> np.ndarray:
        return np.array([d.position.as_array() for d in self.devices]).reshape(-1, 3)

    @cached_property
    def uav_xyz(self) -> np.ndarray:
        return np.array([m.position.as_array() for m in self.uavs]).reshape(-1, 3)

    @cached_property
    def input_bits(self) -> np.ndarray:
        return np.array([d.task.input_bits for d in self.devices], dtype=float)

    @cached_property
    def cycles_per_bit(self) -> np.ndarray:
        return np.array([d.task.cycles_per_bit for d in self.devices], dtype=float)

    @cached_property
    def deadline(self) -> np.ndarray:
        return np.array([d.task.deadline_s for d in self.devices], dtype=float)

    @cached_property
    def local_cpu(self) -> np.ndarray:
        return np.array([d.local_cpu_hz for d in self.devices], dtype=float)

    @cached_property
    def tx_power(self) -> np.ndarray:
        return np.array([d.uplink_tx_power_w for d in self.devices], dtype=float)

    @cached_property
    def uav_cpu(self) -> np.ndarray:
        return np.array([m.max_cpu_hz for m in self.uavs], dtype=float)

    @cached_property
    def relay_power(self) -> np.ndarray:
        return np.array([m.relay_tx_power_w for m in self.uavs], dtype=float)

    @cached_property
    def cluster_of(self) -> np.ndarray:
        owner = np.full(self.num_devices, -1, dtype=int)
        for uav_id, members in self.clustering.assignment.items():
            owner[list(members)] = uav_id
        return owner

    @cached_property
    def members(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.array(self.clustering.assignment.get(m.id, ()), dtype=int)
            for m in self.uavs
        )


# --------------------------------------------------------------------------
# generation parameters and presets


@dataclass(frozen=True)
class DeviceParams:
    input_bits_min: float = 200e6
    input_bits_max: float = 700e6
    cycles_per_bit: float = 1000.0
    cpu_hz_min: float = 0.5e9
    cpu_hz_max: float = 3e9
    deadline_min_s: float = 200.0
    deadline_max_s: float = 200.0
    tx_power_w: float = 1e-3


@dataclass(frozen=True)
class UavParams:
    altitude_m: float = 150.0
    cpu_hz_min: float = 1.2e9
    cpu_hz_max: float = 2e9
    relay_tx_power_w: float = 1.0
    power_efficiency: float = 0.7
    thrust_n: float = 30.0
    rotor_count: int = 4
    rotor_diameter_m: float = 0.254


@dataclass(frozen=True)
class GenParams:
    area_m: float = 300.0
    num_devices: int = 30
    num_uavs: int = 5
    seed: int = 7
    kmeans_max_iters: int = 100
    tbs: Position3 = field(default_factory=lambda: Position3(0.0, 0.0, 0.0))
    radio: RadioConfig = field(default_factory=RadioConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    device: DeviceParams = field(default_factory=DeviceParams)
    uav: UavParams = field(default_factory=UavParams)


def _table2() -> GenParams:
    # Device CPUs exactly as tabulated (MHz); local-only completion then takes
    # hours, so most deadlines are unreachable with this preset.
    return GenParams(device=DeviceParams(cpu_hz_min=0.5e6, cpu_hz_max=3e6))


PRESETS = {
    "rescaled": GenParams,
    "table2": _table2,
    "rescaled_psd": lambda: GenParams(
        radio=RadioConfig(n0_w=10 ** (-170 / 10) * 1e-3, noise_mode="per_hz")
    ),
}


def preset(name: str) -> GenParams:
    try:
        return PRESETS[name]()
    except KeyError:
        raise InvalidRange(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# --------------------------------------------------------------------------
# k-means


def kmeans_objective(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances of every point to its cluster centroid."""
    diff = points - centroids[labels]
    return float(np.sum(diff * diff))


def lloyd(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iters: int = 100,
) -> tuple[np.ndarray, np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Lloyd iterations on 2-D points.

    Returns ``(labels, centroids, history)`` where history holds the
    ``(labels, centroids)`` pair produced by every iteration.
    """
    n = len(points)
    if k > n:
        raise TooFewPoints(f"{k} clusters requested for {n} points")
    if max_iters < 1:
        raise InvalidRange("max_iters must be >= 1")

    centroids = points[rng.choice(n, size=k, replace=False)].copy()
    labels = np.full(n, -1, dtype=int)
    history = []
    for _ in range(max_iters):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # ties -> lowest centroid index
        counts = np.bincount(new_labels, minlength=k)
        for _ in range(k):
            if np.all(counts > 0):
                break
            empty = int(np.flatnonzero(counts == 0)[0])
            far = int(np.argmax(d2[np.arange(n), new_labels]))
            centroids[empty] = points[far]
            d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            new_labels = np.argmin(d2, axis=1)
            counts = np.bincount(new_labels, minlength=k)
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        for j in range(k):
            if counts[j]:  # with duplicate points a cluster can stay empty
                centroids[j] = points[labels == j].mean(axis=0)
        history.append((labels.copy(), centroids.copy()))
        if not changed:
            break
    return labels, centroids, history


def kmeans_associate(
    md_positions: list[Position3],
    num_clusters: int,
    seed: int = 0,
    max_iters: int = 100,
) -> tuple[Clustering, np.ndarray]:
    pts = np.array([[p.x, p.y] for p in md_positions], dtype=float).reshape(-1, 2)
    labels, centroids, _ = lloyd(pts, num_clusters, np.random.default_rng(seed), max_iters)
    assignment = {
        j: tuple(int(i) for i in np.flatnonzero(labels == j)) for j in range(num_clusters)
    }
    return Clustering(assignment), centroids


# --------------------------------------------------------------------------
# generation


def _check_range(name: str, lo: float, hi: float) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise InvalidRange(f"{name}: min {lo} > max {hi}")
    if lo <= 0:
        raise InvalidRange(f"{name}: values must be positive, got {lo}")


def generate_scenario(params: GenParams | None = None) -> Scenario:
    p = params or GenParams()
    if p.num_devices < 1 or p.num_uavs < 1:
        raise EmptyScenario(f"need U >= 1 and M >= 1, got U={p.num_devices}, M={p.num_uavs}")
    dev, uav = p.device, p.uav
    _check_range("device.input_bits", dev.input_bits_min, dev.input_bits_max)
    _check_range("device.cpu_hz", dev.cpu_hz_min, dev.cpu_hz_max)
    _check_range("device.deadline_s", dev.deadline_min_s, dev.deadline_max_s)
    _check_range("uav.cpu_hz", uav.cpu_hz_min, uav.cpu_hz_max)
    if p.area_m <= 0:
        raise InvalidRange("area_m must be positive")

    rng = np.random.default_rng(p.seed)
    U, M = p.num_devices, p.num_uavs
    xy = rng.uniform(0.0, p.area_m, size=(U, 2))
    bits = rng.uniform(dev.input_bits_min, dev.input_bits_max, size=U)
    cpu = rng.uniform(dev.cpu_hz_min, dev.cpu_hz_max, size=U)
    deadline = rng.uniform(dev.deadline_min_s, dev.deadline_max_s, size=U)
    uav_cpu = rng.uniform(uav.cpu_hz_min, uav.cpu_hz_max, size=M)
    kmeans_seed = int(rng.integers(2**31 - 1))

    positions = [Position3(float(x), float(y), 0.0) for x, y in xy]
    clustering, centroids = kmeans_associate(positions, M, kmeans_seed, p.kmeans_max_iters)
    devices = tuple(
        MobileDevice(
            id=i,
            position=positions[i],
            task=TaskSpec(float(bits[i]), dev.cycles_per_bit, float(deadline[i])),
            local_cpu_hz=float(cpu[i]),
            uplink_tx_power_w=dev.tx_power_w,
        )
        for i in range(U)
    )
    uavs = tuple(
        Uav(
            id=j,
            position=Position3(float(centroids[j, 0]), float(centroids[j, 1]), uav.altitude_m),
            max_cpu_hz=float(uav_cpu[j]),
            relay_tx_power_w=uav.relay_tx_power_w,
            power_efficiency=uav.power_efficiency,
            thrust_n=uav.thrust_n,
            rotor_count=uav.rotor_count,
            rotor_diameter_m=uav.rotor_diameter_m,
        )
        for j in range(M)
    )
    return Scenario(devices, uavs, p.tbs, p.radio, p.energy, clustering)


# --------------------------------------------------------------------------
# validation


def validate_scenario(s: Scenario) -> list[str]:
    """Return one message per broken invariant; empty means well-formed."""
    out: list[str] = []

    def positive(owner: str, name: str, value: float) -> None:
        if not value > 0:
            out.append(f"{owner}: {name} must be > 0, got {value}")

    md_ids = [d.id for d in s.devices]
    uav_ids = [m.id for m in s.uavs]
    if md_ids != list(range(len(md_ids))):
        out.append("devices: ids must be 0..U-1 in order")
    if uav_ids != list(range(len(uav_ids))):
        out.append("uavs: ids must be 0..M-1 in order")

    for d in s.devices:
        owner = f"device {d.id}"
        if d.position.z < 0:
            out.append(f"{owner}: z must be >= 0, got {d.position.z}")
        positive(owner, "input_bits", d.task.input_bits)
        positive(owner, "cycles_per_bit", d.task.cycles_per_bit)
        positive(owner, "deadline_s", d.task.deadline_s)
        positive(owner, "local_cpu_hz", d.local_cpu_hz)
        positive(owner, "uplink_tx_power_w", d.uplink_tx_power_w)

    for m in s.uavs:
        owner = f"uav {m.id}"
        if m.position.z < 0:
            out.append(f"{owner}: z must be >= 0, got {m.position.z}")
        positive(owner, "max_cpu_hz", m.max_cpu_hz)
        if not 0 < m.power_efficiency <= 1:
            out.append(f"{owner}: power_efficiency must be in (0, 1], got {m.power_efficiency}")
        if m.rotor_count < 1:
            out.append(f"{owner}: rotor_count must be >= 1, got {m.rotor_count}")
        positive(owner, "rotor_diameter_m", m.rotor_diameter_m)
        positive(owner, "thrust_n", m.thrust_n)
        if m.relay_tx_power_w < 0:
            out.append(f"{owner}: relay_tx_power_w must be >= 0, got {m.relay_tx_power_w}")

    if s.tbs_position.z < 0:
        out.append(f"tbs: z must be >= 0, got {s.tbs_position.z}")

    r = s.radio
    for name in ("h0", "alpha", "n0_w", "subchannel_bw_hz", "relay_total_bw_hz"):
        positive("radio", name, getattr(r, name))
    if r.num_subchannels < 1:
        out.append(f"radio: num_subchannels must be >= 1, got {r.num_subchannels}")
    if r.noise_mode not in ("per_subchannel", "per_hz"):
        out.append(f"radio: unknown noise_mode {r.noise_mode!r}")
    for name in ("md_chip_k", "uav_chip_k", "air_density"):
        positive("energy", name, getattr(s.energy, name))

    seen: dict[int, int] = {}
    for uav_id, members in s.clustering.assignment.items():
        if uav_id not in uav_ids:
            out.append(f"clustering: unknown uav id {uav_id}")
        for md in members:
            if md not in md_ids:
                out.append(f"clustering: unknown device id {md} in uav {uav_id}")
            elif md in seen:
                out.append(
                    f"clustering: not mutually exclusive (device {md} in uav {seen[md]} and {uav_id})"
                )
            else:
                seen[md] = uav_id
    missing = sorted(set(md_ids) - set(seen))
    if missing:
        out.append(f"clustering: not collectively exhaustive (missing device ids {missing})")
    return out
