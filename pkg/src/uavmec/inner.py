"""Projected gradient descent over boxes, capped simplices and budgeted simplices.

Every block subproblem of the outer solver is a smooth convex function over
one of these sets, so a single projected-gradient routine serves them all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InfeasibleStart

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

_BISECT_TOL = 1e-10


def project_box(x, lo, hi) -> np.ndarray:
    return np.clip(x, lo, hi)


def _exact_shift(v, lo, hi, total, lam):
    # Refine the bisection multiplier on the set of free coordinates so the
    # sum constraint holds to rounding error.
    x = np.clip(v - lam, lo, hi)
    free = (x > lo) & (x < hi)
    if np.any(free):
        clamped = x[~free].sum()
        lam_exact = (v[free].sum() - (total - clamped)) / free.sum()
        x_exact = np.clip(v - lam_exact, lo, hi)
        if np.array_equal(x_exact > lo, x > lo) and np.array_equal(x_exact < hi, x < hi):
            return x_exact
    return x


def project_capped_simplex(v, cap: float, lo=0.0, hi=1.0, equality: bool = False) -> np.ndarray:
    """Euclidean projection onto ``{lo <= x <= hi, sum(x) <= cap}``.

    With ``equality=True`` the sum is pinned to ``cap`` instead.  The
    multiplier of the sum constraint is found by bisection.
    """
    v = np.asarray(v, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), v.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), v.shape)
    x = np.clip(v, lo, hi)
    s = x.sum()
    if (not equality and s <= cap) or s == cap:
        return x
    if lo.sum() > cap or (equality and hi.sum() < cap):
        raise ValueError(f"empty set: bounds sum [{lo.sum()}, {hi.sum()}] vs cap {cap}")
    # sum(clip(v - lam)) is nonincreasing in lam; keep sum(a) >= cap >= sum(b)
    if s > cap:
        a, b = 0.0, float(np.max(v - lo))
    else:
        a, b = float(np.min(v - hi)), 0.0
    while b - a > _BISECT_TOL * max(1.0, abs(a), abs(b)):
        mid = 0.5 * (a + b)
        if np.clip(v - mid, lo, hi).sum() > cap:
            a = mid
        else:
            b = mid
    x = _exact_shift(v, lo, hi, cap, b)
    if x.sum() > cap and not equality:
        x = np.clip(v - b, lo, hi)
    return x


def project_budgeted_simplex(
    v, cap: float, weights, budget: float, lo=0.0, hi=1.0, equality: bool = True
) -> np.ndarray:
    """Projection onto a capped simplex intersected with ``weights @ x <= budget``.

    Nested bisection: the outer multiplier prices the budget, the inner
    projection handles the sum.  ``weights @ P(v - mu * weights)`` is
    nonincreasing in ``mu``.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(weights, dtype=float)

    def inner(mu: float) -> np.ndarray:
        return project_capped_simplex(v - mu * w, cap, lo, hi, equality)

    y = inner(0.0)
    if w @ y <= budget:
        return y
    a, b = 0.0, 1.0
    scale = max(1.0, float(np.abs(v).max(initial=0.0)))
    while w @ inner(b * scale) > budget:
        a, b = b, 2.0 * b
        if b > 1e12:
            raise ValueError("budget constraint cannot be met on this simplex")
    a *= scale
    b *= scale
    while b - a > _BISECT_TOL * max(1.0, b):
        mid = 0.5 * (a + b)
        if w @ inner(mid) > budget:
            a = mid
        else:
            b = mid
    return inner(b)


@dataclass
class Group:
    """Coupling constraint on ``x[index]``: ``sum <= total`` (or ``== total``),
    optionally with a linear budget ``weights @ x[index] <= budget``."""

    index: np.ndarray
    total: float
    equality: bool = False
    weights: np.ndarray | None = None
    budget: float | None = None


@dataclass
class FeasibleSet:
    lo: np.ndarray
    hi: np.ndarray
    groups: list[Group] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if np.any(self.lo > self.hi):
            raise ValueError("inconsistent bounds: lo > hi")

    def project(self, x: np.ndarray) -> np.ndarray:
        out = np.clip(x, self.lo, self.hi)
        for g in self.groups:
            idx = g.index
            lo, hi = self.lo[idx], self.hi[idx]
            if g.weights is not None and g.budget is not None:
                out[idx] = project_budgeted_simplex(
                    x[idx], g.total, g.weights, g.budget, lo, hi, g.equality
                )
            else:
                out[idx] = project_capped_simplex(x[idx], g.total, lo, hi, g.equality)
        return out

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            return False
        for g in self.groups:
            s = x[g.index].sum()
            if s > g.total + tol or (g.equality and s < g.total - tol):
                return False
            if g.weights is not None and g.budget is not None:
                if g.weights @ x[g.index] > g.budget + tol * max(1.0, abs(g.budget)):
                    return False
        return True


@dataclass
class BlockProblem:
    fun: Objective
    feasible: FeasibleSet
    x0: np.ndarray


def numeric_gradient(value: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central finite differences with step ``1e-6 * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = 1e-6 * max(1.0, abs(x.flat[i]))
        xp = x.copy()
        xm = x.copy()
        xp.flat[i] += h
        xm.flat[i] -= h
        g.flat[i] = (value(xp) - value(xm)) / (2 * h)
    return g


def projected_gradient_norm(fs: FeasibleSet, x: np.ndarray, grad: np.ndarray) -> float:
    return float(np.linalg.norm(x - fs.project(x - grad)))


def solve_block(
    p: BlockProblem, tol: float = 1e-6, max_iters: int = 500
) -> tuple[np.ndarray, float, int]:
    """Projected gradient with Armijo backtracking.

    Returns ``(x, value, iterations)``; the value never exceeds the value at
    the starting point.
    """
    x = np.array(p.x0, dtype=float)
    if not p.feasible.contains(x):
        raise InfeasibleStart("starting point lies outside the feasible set")
    val, g = p.fun(x)
    for it in range(max_iters):
        x_trial = p.feasible.project(x - g)
        if np.linalg.norm(x - x_trial) <= tol:
            return x, val, it
        step = 1.0
        while True:
            x_new = x_trial if step == 1.0 else p.feasible.project(x - step * g)
            d = x_new - x
            v_new, g_new = p.fun(x_new)
            if v_new <= val + 1e-4 * float(g @ d):
                break
            step *= 0.5
            if step < 1e-14:
                return x, val, it
        x, val, g = x_new, v_new, g_new
    return x, val, max_iters
