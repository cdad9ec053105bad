"""Block successive upper-bound minimisation over (delta, l, f, phi).

Each outer sweep visits the four blocks in an order chosen by the selection
rule.  A block update minimises the true objective plus a proximal term
``theta/2 * ||block - anchor||^2`` with the other blocks frozen.  Hover time
(a max over a UAV's devices) is handled in epigraph form: for a fixed hover
budget ``tau_m`` every block's feasible set becomes a box, a capped simplex
or a budgeted simplex, solved by :func:`uavmec.inner.solve_block`; the
budget itself is chosen by a bounded scalar search because the block value
is convex in it.  The CPU block is expressed as fractions of each UAV's
capacity so the proximal term is scale-free.

During the channel update, interference is frozen at the previous
assignment, which makes the subproblem convex but not an exact upper bound;
every block update is therefore accepted only if the true objective does not
increase (the channel block backtracks toward its previous value first).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import radio
from .costs import L_MIN, CostBreakdown, DecisionVector, evaluate, hover_powers, residuals
from .errors import Infeasible
from .inner import BlockProblem, FeasibleSet, Group, solve_block
from .scenario import Scenario

log = logging.getLogger(__name__)

BLOCKS = ("delta", "l", "f", "phi")
RULES = ("cyclic", "gauss_southwell", "randomized")
RULE_ALIASES = {"gs": "gauss_southwell", "random": "randomized"}

_PHI_GRID = np.linspace(0.0, 1.0, 1001)


@dataclass(frozen=True)
class SolverConfig:
    vartheta: float | tuple[float, float, float, float] = 0.1
    epsilon: float = 1e-3
    max_outer_iters: int = 500
    psi: float = 0.5
    tau: float | None = None  # None: 10x the initial objective
    rule: str = "cyclic"
    seed: int = 0
    inner_tol: float = 1e-6
    inner_max_iters: int = 500

    def __post_init__(self) -> None:
        rule = RULE_ALIASES.get(self.rule, self.rule)
        if rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        object.__setattr__(self, "rule", rule)
        thetas = self.thetas()
        if any(t < 0 for t in thetas):
            raise ValueError("vartheta must be >= 0")
        if not 0 < self.psi < 1:
            raise ValueError("psi must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be >= 0")

    def thetas(self) -> tuple[float, float, float, float]:
        if isinstance(self.vartheta, (int, float)):
            return (float(self.vartheta),) * 4
        return tuple(float(t) for t in self.vartheta)  # type: ignore[return-value]


@dataclass
class SolverResult:
    x: DecisionVector
    trace: list[float]
    objective: float
    iterations: int
    delta_violation: float
    mu: float
    costs: CostBreakdown
    termination: str
    relaxed: DecisionVector
    relaxed_objective: float
    tau: float
    block_orders: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


# --------------------------------------------------------------------------
# initial point


def _greedy_channels(s: Scenario) -> np.ndarray:
    U, N, M = s.num_devices, s.num_subchannels, s.num_uavs
    gain = radio.gain_matrix(s)
    power = s.tx_power[:, None] * gain  # power of device u at UAV m
    delta = np.zeros((U, N))
    assigned = np.zeros(U, dtype=bool)
    for m in range(M):
        members = s.members[m]
        order = members[np.argsort(-gain[members, m], kind="stable")]
        used: set[int] = set()
        for u in order:
            if len(used) == N:
                used.clear()
            others = assigned & (s.cluster_of != m)
            # interference this device would receive plus what it would cause
            received = power[others, m] @ delta[others]
            caused = (delta[others] * power[u, s.cluster_of[others]][:, None]).sum(axis=0)
            score = received + caused
            score[list(used)] = np.inf
            n = int(np.argmin(score))
            delta[u, n] = 1.0
            used.add(n)
            assigned[u] = True
    return delta


def _phi_choice(up, e_full, r_full, T, cost=None) -> float | None:
    """Cheapest phi on the 1e-3 grid meeting both offload-side deadlines
    (smallest such phi when ``cost`` is None), else the balancing point,
    else None.  ``cost`` maps the phi grid to a per-device energy."""
    b = T - up
    if b < 0:
        return None
    edge = (1.0 - _PHI_GRID) * e_full
    rel = _PHI_GRID * r_full
    ok = np.flatnonzero((edge <= b) & (rel <= b))
    if ok.size:
        pick = ok[0] if cost is None else ok[np.argmin(cost(_PHI_GRID[ok]))]
        return float(_PHI_GRID[pick])
    if math.isfinite(e_full) and e_full + r_full > 0:
        phi = e_full / (e_full + r_full)
        if max((1 - phi) * e_full, phi * r_full) <= b:
            return phi
    return None


def initial_feasible_point(
    s: Scenario,
    *,
    l: float | np.ndarray | None = None,
    phi: float | np.ndarray | None = None,
    delta: np.ndarray | None = None,
) -> DecisionVector:
    """Construct a point satisfying every constraint.

    ``l``, ``phi`` and ``delta`` may be pinned (used by the baselines);
    otherwise they are chosen by the greedy rules.  Raises
    :class:`Infeasible` when no adjustment meets the deadlines.
    """
    U = s.num_devices
    bits, cpb, floc, T = s.input_bits, s.cycles_per_bit, s.local_cpu, s.deadline
    owner = s.cluster_of
    delta = _greedy_channels(s) if delta is None else np.array(delta, dtype=float)
    f = s.uav_cpu[owner] / np.bincount(owner, minlength=s.num_uavs)[owner]

    l_lo = np.clip(1.0 - T * floc / (bits * cpb), L_MIN, 1.0)
    if l is None:
        l_vec = l_lo.copy()
    else:
        l_vec = np.broadcast_to(np.asarray(l, dtype=float), (U,)).copy()
        bad = np.flatnonzero(l_vec < l_lo - 1e-12)
        if bad.size:
            raise Infeasible(f"local deadline unreachable for devices {bad.tolist()}")

    rates = radio.uplink_rates(s, delta)
    up = l_vec * bits * np.where(delta != 0, delta / rates, 0.0).sum(axis=1)
    r_full = l_vec * bits / radio.relay_rates(s)[owner]
    w_full = l_vec * bits * cpb  # cycles if everything is computed on the UAV

    phi_fixed = phi is not None
    phi_vec = (
        np.broadcast_to(np.asarray(phi, dtype=float), (U,)).copy() if phi_fixed else np.ones(U)
    )
    for m in range(s.num_uavs):
        members = s.members[m]
        if members.size == 0:
            continue
        pending = []
        for u in members:
            if not phi_fixed:
                choice = _phi_choice(
                    up[u], w_full[u] / f[u], r_full[u], T[u], _offload_cost(s, u, w_full[u], f[u], r_full[u])
                )
                if choice is None:
                    pending.append(u)
                    continue
                phi_vec[u] = choice
            elif not _meets(up[u], (1 - phi_vec[u]) * w_full[u] / f[u], phi_vec[u] * r_full[u], T[u]):
                pending.append(u)
        if pending:
            f[members] = _redistribute_cpu(
                s, m, members, up, w_full, r_full, phi_vec, phi_fixed, T
            )

    x = DecisionVector(delta, l_vec, f, phi_vec)
    res = residuals(s, x)
    if not res.feasible(1e-9):
        raise Infeasible(f"no feasible initial point: violated {sorted(res.violations(1e-9))}")
    return x


def _offload_cost(s: Scenario, u: int, cycles: float, f_hz: float, relay_t: float):
    """Energy of the offloaded part of device ``u`` as a function of phi:
    onboard computing, relaying, and hovering for the longer of the two."""
    m = int(s.cluster_of[u])
    e_edge = cycles * s.energy.uav_chip_k * f_hz**2
    e_relay = s.relay_power[m] * relay_t
    t_edge = cycles / f_hz
    p_hov = float(hover_powers(s)[m])

    def cost(phi: np.ndarray) -> np.ndarray:
        busy = np.maximum((1.0 - phi) * t_edge, phi * relay_t)
        return (1.0 - phi) * e_edge + phi * e_relay + p_hov * busy

    return cost


def _meets(up, edge, rel, T) -> bool:
    return up + max(edge, rel) <= T


def _redistribute_cpu(s, m, members, up, w_full, r_full, phi_vec, phi_fixed, T) -> np.ndarray:
    """Give each device of UAV ``m`` the CPU it needs, leftover split equally."""
    need = np.zeros(members.size)
    for i, u in enumerate(members):
        b = T[u] - up[u]
        if b <= 0:
            raise Infeasible(f"device {u}: uplink alone exceeds the deadline")
        if not phi_fixed:
            # relay as much as the budget allows, compute the rest onboard
            phi_vec[u] = min(1.0, b / r_full[u]) if r_full[u] > 0 else 1.0
        elif phi_vec[u] * r_full[u] > b:
            raise Infeasible(f"device {u}: relay alone exceeds the deadline")
        need[i] = (1.0 - phi_vec[u]) * w_full[u] / b
    cap = s.uav_cpu[m]
    if need.sum() > cap * (1 - 1e-12):
        raise Infeasible(f"uav {m}: CPU demand {need.sum():.3g} Hz exceeds capacity {cap:.3g} Hz")
    return need + (cap * (1 - 1e-12) - need.sum()) / members.size


# --------------------------------------------------------------------------
# block subproblems


@dataclass
class _ClusterBlock:
    """One block restricted to one UAV's devices, parametrised by the hover budget."""

    anchor: np.ndarray
    tau_lo: float
    tau_hi: float
    tau_cur: float
    p_hov: float
    feasible_at: Callable[[float], FeasibleSet]
    energy: Callable[[np.ndarray], tuple[float, np.ndarray]]  # block-dependent energy
    write: Callable[[DecisionVector, np.ndarray], DecisionVector]


def _context(s: Scenario, x: DecisionVector) -> dict:
    rates = radio.uplink_rates(s, x.delta)
    inv = np.where(x.delta != 0, x.delta / rates, 0.0).sum(axis=1)
    owner = s.cluster_of
    r0 = radio.relay_rates(s)[owner]
    cb = evaluate(s, x)
    return {"rates": rates, "inv": inv, "r0": r0, "p0": s.relay_power[owner], "cb": cb}


def _l_block(s, x, ctx, m, idx) -> _ClusterBlock:
    bits, cpb, floc, T = s.input_bits[idx], s.cycles_per_bit[idx], s.local_cpu[idx], s.deadline[idx]
    k, k2 = s.energy.md_chip_k, s.energy.uav_chip_k
    phi, f = x.phi[idx], x.f[idx]
    r0, p0 = ctx["r0"][idx], ctx["p0"][idx]
    up_unit = bits * ctx["inv"][idx]
    edge_cycles = (1 - phi) * bits * cpb
    with np.errstate(divide="ignore", invalid="ignore"):
        edge_unit = np.where(edge_cycles > 0, edge_cycles / f, 0.0)
    a = up_unit + np.maximum(edge_unit, phi * bits / r0)
    c = (
        -bits * cpb * k * floc**2
        + s.tx_power[idx] * up_unit
        + edge_cycles * k2 * f**2
        + phi * bits * p0 / r0
    )
    lo = np.clip(1.0 - T * floc / (bits * cpb), L_MIN, 1.0)
    with np.errstate(divide="ignore"):
        cap_T = np.minimum(1.0, np.where(a > 0, T / a, np.inf))

    def feasible_at(tau: float) -> FeasibleSet:
        with np.errstate(divide="ignore"):
            hi = np.minimum(cap_T, np.where(a > 0, tau / a, np.inf))
        return FeasibleSet(lo, np.maximum(hi, lo))

    def energy(z):
        return float(c @ z), c

    def write(xv, z):
        l = xv.l.copy()
        l[idx] = z
        return xv.with_(l=l)

    return _ClusterBlock(
        x.l[idx].copy(), float(np.max(a * lo)), float(np.max(a * cap_T)),
        float(ctx["cb"].t_hov[m]), float(ctx["cb"].p_hov[m]), feasible_at, energy, write,
    )


def _phi_block(s, x, ctx, m, idx) -> _ClusterBlock:
    bits, cpb, T = s.input_bits[idx], s.cycles_per_bit[idx], s.deadline[idx]
    k2 = s.energy.uav_chip_k
    l, f = x.l[idx], x.f[idx]
    r0, p0 = ctx["r0"][idx], ctx["p0"][idx]
    up = ctx["cb"].t_uplink[idx]
    cycles = l * bits * cpb
    with np.errstate(divide="ignore"):
        e = np.where(f > 0, cycles / f, np.inf)
    r = l * bits / r0
    d = -cycles * k2 * f**2 + l * bits * p0 / r0
    best = np.where(np.isfinite(e), e * r / (e + r), r)
    worst = np.where(np.isfinite(e), np.maximum(e, r), r)

    def feasible_at(tau: float) -> FeasibleSet:
        b = np.minimum(tau, T) - up
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(np.isfinite(e), 1.0 - b / e, 1.0)
            hi = np.where(r > 0, b / r, 1.0)
        lo = np.clip(lo, 0.0, 1.0)
        hi = np.clip(hi, 0.0, 1.0)
        return FeasibleSet(lo, np.maximum(hi, lo))

    def energy(z):
        return float(d @ z), d

    def write(xv, z):
        phi = xv.phi.copy()
        phi[idx] = z
        return xv.with_(phi=phi)

    return _ClusterBlock(
        x.phi[idx].copy(), float(np.max(up + best)), float(np.max(np.minimum(T, up + worst))),
        float(ctx["cb"].t_hov[m]), float(ctx["cb"].p_hov[m]), feasible_at, energy, write,
    )


def _f_block(s, x, ctx, m, idx) -> _ClusterBlock:
    bits, cpb, T = s.input_bits[idx], s.cycles_per_bit[idx], s.deadline[idx]
    F = s.uav_cpu[m]
    k2 = s.energy.uav_chip_k
    l, phi = x.l[idx], x.phi[idx]
    up = ctx["cb"].t_uplink[idx]
    W = (1 - phi) * l * bits * cpb
    r = phi * l * bits / ctx["r0"][idx]
    curv = W * k2 * F**2
    busy = W > 0

    def lower(tau: float) -> np.ndarray:
        b = np.minimum(tau, T) - up
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(busy, W / (F * np.maximum(b, 0.0)), 0.0)

    floor = float(np.max(up + r))
    if np.any(busy):
        floor = max(floor, float(np.max(up[busy])))
    top = float(np.max(np.where(busy, T, up + r)))
    # smallest budget whose CPU demand fits the capacity
    a, b = floor, top
    if np.sum(lower(b)) <= 1.0:
        for _ in range(200):
            if b - a <= 1e-12 * max(1.0, b):
                break
            mid = 0.5 * (a + b)
            if np.all(np.isfinite(lower(mid))) and np.sum(lower(mid)) <= 1.0:
                b = mid
            else:
                a = mid
    tau_lo = b

    def feasible_at(tau: float) -> FeasibleSet:
        lo = np.minimum(lower(tau), 1.0)
        return FeasibleSet(lo, np.ones_like(lo), [Group(np.arange(lo.size), 1.0)])

    def energy(z):
        return float(curv @ (z * z)), 2.0 * curv * z

    def write(xv, z):
        f = xv.f.copy()
        f[idx] = z * F
        return xv.with_(f=f)

    return _ClusterBlock(
        x.f[idx] / F, tau_lo, top, float(ctx["cb"].t_hov[m]), float(ctx["cb"].p_hov[m]),
        feasible_at, energy, write,
    )


def _delta_block(s, x, ctx, m, idx) -> _ClusterBlock:
    N = s.num_subchannels
    bits, T = s.input_bits[idx], s.deadline[idx]
    cb = ctx["cb"]
    q = np.maximum(cb.t_edge[idx], cb.t_relay[idx])
    t = (x.l[idx] * bits)[:, None] / ctx["rates"][idx]  # frozen interference
    E = s.tx_power[idx][:, None] * t
    cost = E.ravel()
    rows = [np.arange(i * N, (i + 1) * N) for i in range(idx.size)]

    def feasible_at(tau: float) -> FeasibleSet:
        # never below the cheapest row: guards against round-off in tau
        budget = np.maximum(np.minimum(tau, T) - q, t.min(axis=1))
        groups = [
            Group(rows[i], 1.0, equality=True, weights=t[i], budget=float(budget[i]))
            for i in range(idx.size)
        ]
        return FeasibleSet(np.zeros(cost.size), np.ones(cost.size), groups)

    def energy(z):
        return float(cost @ z), cost

    def write(xv, z):
        delta = xv.delta.copy()
        delta[idx] = z.reshape(idx.size, N)
        return xv.with_(delta=delta)

    return _ClusterBlock(
        x.delta[idx].ravel().copy(), float(np.max(q + t.min(axis=1))),
        float(np.max(np.minimum(T, q + t.max(axis=1)))), float(cb.t_hov[m]),
        float(cb.p_hov[m]), feasible_at, energy, write,
    )


_BUILDERS = {"delta": _delta_block, "l": _l_block, "f": _f_block, "phi": _phi_block}


def _surrogate(blk: _ClusterBlock, theta: float):
    def fun(z):
        e, g = blk.energy(z)
        diff = z - blk.anchor
        return e + 0.5 * theta * float(diff @ diff), g + theta * diff

    return fun


def _solve_cluster(blk: _ClusterBlock, theta: float, cfg: SolverConfig) -> np.ndarray:
    fun = _surrogate(blk, theta)
    cache: dict[float, tuple[float, np.ndarray]] = {}

    def at(tau: float) -> float:
        if tau not in cache:
            fs = blk.feasible_at(tau)
            start = blk.anchor if fs.contains(blk.anchor) else fs.project(blk.anchor)
            z, val, _ = solve_block(BlockProblem(fun, fs, start), cfg.inner_tol, cfg.inner_max_iters)
            cache[tau] = (blk.p_hov * tau + val, z)
        return cache[tau][0]

    tau_cur = min(max(blk.tau_cur, blk.tau_lo), max(blk.tau_hi, blk.tau_lo))
    at(tau_cur)
    at(blk.tau_lo)
    if blk.tau_hi > blk.tau_lo:
        res = minimize_scalar(
            at, bounds=(blk.tau_lo, blk.tau_hi), method="bounded",
            options={"xatol": 1e-10 * max(1.0, blk.tau_hi)},
        )
        at(float(res.x))
    best = min(cache, key=lambda t: (cache[t][0], t))
    return cache[best][1]


def _update_block(
    s: Scenario, x: DecisionVector, block: str, theta: float, cfg: SolverConfig
) -> DecisionVector:
    current = evaluate(s, x).objective
    for m in range(s.num_uavs):
        idx = s.members[m]
        if idx.size == 0:
            continue
        ctx = _context(s, x)
        blk = _BUILDERS[block](s, x, ctx, m, idx)
        try:
            z = _solve_cluster(blk, theta, cfg)
        except ValueError as exc:  # empty feasible set at this budget
            log.debug("block %s uav %d skipped: %s", block, m, exc)
            continue
        steps = (1.0, 0.5, 0.25, 0.125, 0.0625) if block == "delta" else (1.0,)
        for step in steps:
            cand = blk.write(x, blk.anchor + step * (z - blk.anchor))
            value = evaluate(s, cand).objective
            if value <= current and residuals(s, cand).feasible(1e-9):
                x, current = cand, value
                break
    return x


# --------------------------------------------------------------------------
# gradients (smooth part of the objective, i.e. without hover energy)


def smooth_gradient(s: Scenario, x: DecisionVector, block: str) -> np.ndarray:
    """Analytic gradient of the non-hover energy w.r.t. one block in natural units
    (delta entries, l, f in Hz, phi), including the interference coupling."""
    bits, cpb, floc = s.input_bits, s.cycles_per_bit, s.local_cpu
    k, k2 = s.energy.md_chip_k, s.energy.uav_chip_k
    owner = s.cluster_of
    r0 = radio.relay_rates(s)[owner]
    p0 = s.relay_power[owner]
    if block == "l":
        rates = radio.uplink_rates(s, x.delta)
        inv = np.where(x.delta != 0, x.delta / rates, 0.0).sum(axis=1)
        return (
            -bits * cpb * k * floc**2
            + s.tx_power * bits * inv
            + (1 - x.phi) * bits * cpb * k2 * x.f**2
            + x.phi * bits * p0 / r0
        )
    if block == "phi":
        return -x.l * bits * cpb * k2 * x.f**2 + x.l * bits * p0 / r0
    if block == "f":
        return 2.0 * (1 - x.phi) * x.l * bits * cpb * k2 * x.f
    if block == "delta":
        sinr = radio.sinr_matrix(s, x.delta)
        rates = s.radio.subchannel_bw_hz * np.log2(1.0 + sinr)
        load = (s.tx_power * x.l * bits)[:, None]
        direct = load / rates
        interf = radio.interference(s, x.delta)[owner] + radio.uplink_noise_w(s.radio)
        # d(1/R)/dI for each device's own link
        dinv = s.radio.subchannel_bw_hz / math.log(2) * sinr / ((1 + sinr) * interf * rates**2)
        kern = x.delta * load * dinv
        per_uav = np.zeros((s.num_uavs, s.num_subchannels))
        np.add.at(per_uav, owner, kern)
        return direct + radio.cross_power(s) @ per_uav
    raise ValueError(f"unknown block {block!r}")


def block_gradient_norms(s: Scenario, x: DecisionVector, theta=0.0) -> np.ndarray:
    """Projected-gradient norm of each block surrogate at the current point,
    with every UAV's hover budget held at its current hover time."""
    thetas = (theta,) * 4 if np.isscalar(theta) else theta
    out = np.zeros(4)
    ctx = _context(s, x)
    for b, name in enumerate(BLOCKS):
        total = 0.0
        for m in range(s.num_uavs):
            idx = s.members[m]
            if idx.size == 0:
                continue
            blk = _BUILDERS[name](s, x, ctx, m, idx)
            fs = blk.feasible_at(max(blk.tau_cur, blk.tau_lo))
            _, g = _surrogate(blk, thetas[b])(blk.anchor)
            z = blk.anchor
            total += float(np.sum((z - fs.project(z - g)) ** 2))
        out[b] = math.sqrt(total)
    return out


# --------------------------------------------------------------------------
# selection, rounding, gap


def select_blocks(
    rule: str, r: int, seed: int = 0, block_gradient_norms: Sequence[float] | None = None
) -> tuple[int, ...]:
    rule = RULE_ALIASES.get(rule, rule)
    if rule == "cyclic":
        return (0, 1, 2, 3)
    if rule == "randomized":
        return tuple(int(i) for i in np.random.default_rng([seed, r]).permutation(4))
    if rule == "gauss_southwell":
        if block_gradient_norms is None:
            raise ValueError("gauss_southwell needs block gradient norms")
        norms = np.asarray(block_gradient_norms, dtype=float)
        return tuple(int(i) for i in np.argsort(-norms, kind="stable"))
    raise ValueError(f"unknown rule {rule!r}")


def round_delta(delta_relaxed: np.ndarray, psi: float) -> np.ndarray:
    if not 0 < psi < 1:
        raise ValueError("psi must lie in (0, 1)")
    return (np.asarray(delta_relaxed) >= psi).astype(float)


def violation_and_repair(
    delta_binary: np.ndarray, delta_relaxed: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Largest row-sum excess of a rounded assignment, and the assignment with
    each over-full row reduced to its strongest relaxed entry."""
    delta_binary = np.asarray(delta_binary, dtype=float)
    weights = delta_binary if delta_relaxed is None else np.asarray(delta_relaxed, dtype=float)
    rows = delta_binary.sum(axis=1)
    violation = float(np.max(np.maximum(0.0, rows - 1.0), initial=0.0))
    repaired = delta_binary.copy()
    for u in np.flatnonzero(rows > 1):
        on = np.flatnonzero(delta_binary[u] > 0)
        keep = on[np.argmax(weights[u, on])]  # argmax takes the lowest index on ties
        repaired[u] = 0.0
        repaired[u, keep] = 1.0
    return violation, repaired


def integrality_gap(value: float, tau: float, violation: float) -> float:
    denom = value + tau * violation
    if not denom > 0:
        raise ValueError("integrality gap undefined for a non-positive denominator")
    return value / denom


def surrogate_value(
    s: Scenario, candidate: DecisionVector, anchor: DecisionVector, block: str, theta: float
) -> float:
    """True objective at ``candidate`` plus the proximal term of ``block``."""
    a, c = getattr(anchor, block), getattr(candidate, block)
    if block == "f":
        scale = s.uav_cpu[s.cluster_of]
        diff = (c - a) / scale
    else:
        diff = c - a
    return evaluate(s, candidate).objective + 0.5 * theta * float(np.sum(diff * diff))


# --------------------------------------------------------------------------
# driver


def _sweeps(
    s: Scenario, x: DecisionVector, cfg: SolverConfig, blocks: Sequence[str]
) -> tuple[DecisionVector, list[float], str, list[tuple[int, ...]]]:
    thetas = cfg.thetas()
    active = [BLOCKS.index(b) for b in blocks]
    trace = [evaluate(s, x).objective]
    orders = []
    termination = "max_iters"
    for r in range(cfg.max_outer_iters):
        norms = None
        if cfg.rule == "gauss_southwell":
            norms = block_gradient_norms(s, x, thetas)
        order = tuple(b for b in select_blocks(cfg.rule, r, cfg.seed, norms) if b in active)
        orders.append(order)
        for b in order:
            x = _update_block(s, x, BLOCKS[b], thetas[b], cfg)
        trace.append(evaluate(s, x).objective)
        prev, new = trace[-2], trace[-1]
        log.debug("sweep %d order %s objective %.9g", r + 1, order, new)
        if abs(prev - new) <= cfg.epsilon * abs(prev):
            termination = "converged"
            break
    return x, trace, termination, orders


def bsum_solve(
    s: Scenario,
    cfg: SolverConfig | None = None,
    *,
    x0: DecisionVector | None = None,
    blocks: Sequence[str] = BLOCKS,
) -> SolverResult:
    """Relax, sweep, round, repair.

    ``trace[0]`` is the objective at the starting point and ``trace[r]`` the
    objective after sweep ``r``.  Blocks not listed in ``blocks`` stay at
    their starting values.
    """
    cfg = cfg or SolverConfig()
    x = initial_feasible_point(s) if x0 is None else x0.copy()
    if not residuals(s, x).feasible(1e-9):
        raise Infeasible("starting point violates the constraints")
    tau = cfg.tau if cfg.tau is not None else 10.0 * evaluate(s, x).objective

    x, trace, termination, orders = _sweeps(s, x, cfg, blocks)
    relaxed = x
    relaxed_value = trace[-1]

    rounded = round_delta(relaxed.delta, cfg.psi)
    violation, repaired = violation_and_repair(rounded, relaxed.delta)
    empty = np.flatnonzero(repaired.sum(axis=1) == 0)
    repaired[empty, np.argmax(relaxed.delta[empty], axis=1)] = 1.0
    mu = integrality_gap(relaxed_value, tau, violation)

    final = relaxed.with_(delta=repaired)
    if not np.array_equal(repaired, relaxed.delta):
        final = _polish(s, final, cfg, [b for b in blocks if b != "delta"])

    costs = evaluate(s, final)
    return SolverResult(
        x=final, trace=trace, objective=costs.objective, iterations=len(trace) - 1,
        delta_violation=violation, mu=mu, costs=costs, termination=termination,
        relaxed=relaxed, relaxed_objective=relaxed_value, tau=tau, block_orders=orders,
    )


def _polish(s: Scenario, x: DecisionVector, cfg: SolverConfig, blocks) -> DecisionVector:
    """Re-optimise the continuous blocks around a rounded channel assignment."""
    if not residuals(s, x).feasible(1e-9):
        pinned = {}
        if "l" not in blocks:
            pinned["l"] = x.l
        if "phi" not in blocks:
            pinned["phi"] = x.phi
        x = initial_feasible_point(s, delta=x.delta, **pinned)
    if blocks:
        x, _, _, _ = _sweeps(s, x, cfg, blocks)
    return x
