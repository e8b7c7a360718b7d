"""One-parameter matrix flows, a right-invariant distance proxy, and the
time-change cocycle inverted numerically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .liealg import as_matrix, expm, frobenius


@dataclass
class FlowSpec:
    """A flow g -> exp(t W) g on a matrix group."""

    generator: np.ndarray

    def __post_init__(self):
        self.generator = as_matrix(self.generator)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]


@dataclass
class TimeChangeSpec:
    """A flow together with a positive bounded speed function tau."""

    flow: FlowSpec
    tau: Callable[[np.ndarray], float]
    tau_min: float
    tau_max: float

    def __post_init__(self):
        if not (0.0 < self.tau_min <= self.tau_max):
            raise ValueError("need 0 < tau_min <= tau_max")


def flow_point(spec: FlowSpec, t: float, g: np.ndarray) -> np.ndarray:
    """exp(t W) g.  Overflow in expm signals t too large for this generator."""
    return expm(t * spec.generator) @ as_matrix(g)


def group_dist(g: np.ndarray, h: np.ndarray) -> float:
    """|| g h^{-1} - I ||_F.

    Exactly right-invariant and zero iff g == h.  Used throughout as an
    upper-bound proxy for any right-invariant metric at small distances.
    """
    g = as_matrix(g)
    h = as_matrix(h)
    if g.shape != h.shape:
        raise ValueError("dimension mismatch")
    try:
        hinv = np.linalg.inv(h)
    except np.linalg.LinAlgError as exc:
        raise ValueError("second argument is singular; not a group element") from exc
    return frobenius(g @ hinv - np.eye(g.shape[0]))


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      tol: float) -> float:
    """Classic recursive Simpson with Richardson acceptance."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, budget, depth):
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        if depth > 40 or abs(left + right - whole) <= 15.0 * budget:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, xm, f0, fl, f1, left, budget / 2.0, depth + 1)
                + recurse(xm, x2, f1, fr, f2, right, budget / 2.0, depth + 1))

    if a == b:
        return 0.0
    f0, f1, f2 = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, f0, f1, f2)
    return recurse(a, b, f0, f1, f2, whole, tol, 0)


class QuadratureError(Exception):
    """Speed integral failed to bracket or converge."""


def time_change_alpha(spec: TimeChangeSpec, g: np.ndarray, t: float,
                      tol: float = 1e-10) -> float:
    """Invert the reparametrization condition int_0^alpha tau(phi_s g) ds = t.

    The speed bounds give the bracket alpha in [t/tau_max, t/tau_min] (signs
    flipped for t < 0); the integral is evaluated with adaptive Simpson at
    ``tol`` per unit time and the root located by bisection.
    """
    g = as_matrix(g)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0.0:
        return 0.0

    def speed(s: float) -> float:
        val = float(spec.tau(flow_point(spec.flow, s, g)))
        if not (spec.tau_min - 1e-12 <= val <= spec.tau_max + 1e-12):
            raise QuadratureError(
                f"tau({val}) left the declared band [{spec.tau_min}, {spec.tau_max}]")
        return val

    def accumulated(alpha: float) -> float:
        budget = tol * max(1.0, abs(alpha))
        return _adaptive_simpson(speed, 0.0, alpha, budget)

    if t > 0:
        lo, hi = t / spec.tau_max, t / spec.tau_min
    else:
        lo, hi = t / spec.tau_min, t / spec.tau_max
    flo = accumulated(lo) - t
    fhi = accumulated(hi) - t
    if flo > 1e-9 or fhi < -1e-9:
        raise QuadratureError("sandwich bracket failed; tau bounds inconsistent")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-10 * max(1.0, abs(mid)):
            return mid
        fm = accumulated(mid) - t
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def orbit_csv(spec: FlowSpec, g: np.ndarray, times, path) -> None:
    """Dump orbit samples as CSV rows (t, entries flattened row-major)."""
    g = as_matrix(g)
    dim = spec.dim
    header = ["t"] + [f"m{i}{j}" for i in range(dim) for j in range(dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in times:
            point = flow_point(spec, float(t), g)
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in point.reshape(-1)])
