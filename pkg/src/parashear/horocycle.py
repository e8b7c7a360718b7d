"""Shear machinery for the 2x2 unipotent flow: triangular coordinates for
nearby points, the quadratic compensator chi, the extremal polynomial
constant, and first-crossing shear witnesses.

Conventions: the flow is h_t = exp(tU) with U = [[0,1],[0,0]], and the
coordinates (a,b,c) of a displacement write the displaced point as
exp(aU) exp(bX) exp(cV) applied to the base point, X = diag(1,-1) and
V = [[0,0],[1,0]].  With those coordinates chi compensates the flow of the
base point while the displaced point flows at unit speed; the lower
triangular correction h_t exp(cV) = L(t) h_{t/(1+ct)} makes this exact for
the pure-c case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .flows import group_dist
from .liealg import as_matrix, expm, sl2_triple
from .reporting import WitnessReport

U_MAT, X_MAT, V_MAT = sl2_triple()


class OutOfChart(Exception):
    """Displacement outside the triangular coordinate chart (m22 <= 0)."""


class NoCrossing(Exception):
    """|f| never reached the threshold on the admissible range."""


@dataclass
class UXVCoords:
    """Triangular coordinates of a displaced point relative to a base point."""

    a: float
    b: float
    c: float

    def matrix(self) -> np.ndarray:
        """exp(aU) exp(bX) exp(cV)."""
        return expm(self.a * U_MAT) @ expm(self.b * X_MAT) @ expm(self.c * V_MAT)


def uxv_decompose(x: np.ndarray, y: np.ndarray) -> UXVCoords:
    """Coordinates (a,b,c) with y = exp(aU) exp(bX) exp(cV) x.

    With m = y x^{-1}: b = -ln m22, a = m12/m22, c = m21/m22.  Valid on the
    chart m22 > 0.
    """
    x = as_matrix(x)
    y = as_matrix(y)
    m = y @ np.linalg.inv(x)
    m22 = m[1, 1]
    if m22 <= 0.0:
        raise OutOfChart(f"m22 = {m22:.6g} <= 0: outside the coordinate chart")
    return UXVCoords(a=float(m[0, 1] / m22), b=float(-math.log(m22)),
                     c=float(m[1, 0] / m22))


def chi(t: float, b: float, c: float) -> float:
    """Compensated flow time e^{-2b} t - e^{-3b} c t^2."""
    return math.exp(-2.0 * b) * t - math.exp(-3.0 * b) * c * t * t


def shear_offset(t: float, b: float, c: float) -> float:
    """chi(t) - t = (e^{-2b} - 1) t - e^{-3b} c t^2."""
    return math.expm1(-2.0 * b) * t - math.exp(-3.0 * b) * c * t * t


# ---------------------------------------------------------------------------
# the extremal polynomial constant
# ---------------------------------------------------------------------------

def _sup_abs_quadratic(b1, b2, b3, T: float):
    """sup over [0, T] of |b1 + b2 t + b3 t^2|, vectorized and exact."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    b3 = np.asarray(b3, dtype=float)
    end = np.abs(b1 + b2 * T + b3 * T * T)
    out = np.maximum(np.abs(b1), end)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstar = np.where(b3 != 0.0, -b2 / (2.0 * b3), -1.0)
    inside = (tstar > 0.0) & (tstar < T)
    vertex = np.abs(b1 + b2 * tstar + b3 * tstar * tstar)
    return np.where(inside, np.maximum(out, vertex), out)


def _min_sup_on_face(pinned: int, T: float, bounds: tuple[float, float, float],
                     coarse: int = 201, refine_rounds: int = 3) -> float:
    """Minimize the sup norm over one face of the coefficient box.

    ``pinned`` selects the coefficient held at +bound; the two free
    coefficients are grid-searched, then the winner is refined on shrinking
    local grids.  The p <-> -p symmetry makes the -bound faces redundant.
    """
    free = [i for i in range(3) if i != pinned]

    def sup_at(f0, f1):
        coef = [None, None, None]
        coef[pinned] = np.full_like(np.asarray(f0, dtype=float), bounds[pinned])
        coef[free[0]] = f0
        coef[free[1]] = f1
        return _sup_abs_quadratic(coef[0], coef[1], coef[2], T)

    lo0, hi0 = -bounds[free[0]], bounds[free[0]]
    lo1, hi1 = -bounds[free[1]], bounds[free[1]]
    best = math.inf
    best_pt = (0.0, 0.0)
    for _ in range(refine_rounds + 1):
        g0 = np.linspace(lo0, hi0, coarse)
        g1 = np.linspace(lo1, hi1, coarse)
        f0, f1 = np.meshgrid(g0, g1, indexing="ij")
        vals = sup_at(f0, f1)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[idx] < best:
            best = float(vals[idx])
            best_pt = (float(f0[idx]), float(f1[idx]))
        # shrink around the winner, clipped to the face
        w0 = (hi0 - lo0) / (coarse - 1) * 4.0
        w1 = (hi1 - lo1) / (coarse - 1) * 4.0
        lo0 = max(-bounds[free[0]], best_pt[0] - w0)
        hi0 = min(bounds[free[0]], best_pt[0] + w0)
        lo1 = max(-bounds[free[1]], best_pt[1] - w1)
        hi1 = min(bounds[free[1]], best_pt[1] + w1)
        coarse = 81
    return best


_C0_CACHE: dict[float, float] = {}


def solve_extremal_constant(T: float) -> float:
    """Largest c0 with: sup_{[0,T]} |b1 + b2 t + b3 t^2| <= c0 forcing
    |b1| <= 1/4, |b2| <= 1/(4T), |b3| <= 1/(4T^2).

    Equal to the minimum sup norm over the boundary of the coefficient box,
    by homogeneity.  Solved by dense grid search plus local refinement on
    each face of the box; the minimizing face is the leading-coefficient
    one and the value is 1/32, independent of T.
    """
    if T <= 0.0:
        raise ValueError("T must be positive")
    key = float(T)
    if key not in _C0_CACHE:
        bounds = (0.25, 0.25 / T, 0.25 / (T * T))
        _C0_CACHE[key] = min(_min_sup_on_face(i, T, bounds) for i in range(3))
    return _C0_CACHE[key]


def derive_c0(t_grid) -> float:
    """Solve the extremal constant on every T in the grid and return it.

    The substitution t -> T t makes the constant T-independent; solving each
    T directly and comparing is the invariance check, so disagreement above
    1e-6 signals a solver bug.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(t <= 0 for t in t_grid):
        raise ValueError("t_grid must be nonempty and positive")
    values = [solve_extremal_constant(t) for t in t_grid]
    if max(values) - min(values) > 1e-6:
        raise RuntimeError(f"extremal constant not scale-invariant: {values}")
    return values[0]


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------

@dataclass
class WitnessConfig:
    c0: float | None = None
    kappa: float | None = None      # defaults to epsilon^2
    delta: float = 1e-3             # admissible coordinate size
    n_eps: float = 10.0             # external closeness constants, config only
    delta_prime: float = 1e-3
    paper_literal: bool = False     # strict exponent schedule for kappa

    def resolve_kappa(self, epsilon: float) -> float:
        if self.kappa is not None:
            return self.kappa
        if self.paper_literal:
            return min(epsilon ** 40, self.n_eps ** -20, self.delta_prime)
        return epsilon ** 2


@dataclass
class ShearWitness:
    """First time M with |f| >= c0, plus the shift schedule p_L = f(L)."""

    M: float
    c0: float
    kappa: float
    epsilon: float
    coeff_linear: float             # e^{-2b} - 1
    coeff_quadratic: float          # -e^{-3b} c
    t_max: float
    p_of_L: Callable[[float], float] = field(repr=False, default=None)

    def __post_init__(self):
        if self.p_of_L is None:
            b2, b3 = self.coeff_linear, self.coeff_quadratic
            self.p_of_L = lambda L: b2 * L + b3 * L * L


def _real_roots(a2: float, a1: float, a0: float) -> list[float]:
    """Real roots of a2 t^2 + a1 t + a0 = 0, numerically stable."""
    if a2 == 0.0:
        return [] if a1 == 0.0 else [-a0 / a1]
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (a1 + math.copysign(sq, a1)) if a1 != 0.0 else 0.5 * sq
    if q == 0.0:
        return [0.0]    # a1 = a0 = 0: double root at the origin
    return [q / a2, a0 / q]


def strong_r_witness(a: float, b: float, c: float, epsilon: float,
                     config: WitnessConfig | None = None) -> ShearWitness:
    """First-crossing witness for f(t) = (e^{-2b}-1) t - e^{-3b} c t^2.

    M is the least t in [0, min(|b|^{-1}, |c|^{-1/2})] with |f(t)| >= c0,
    from the closed-form quadratic roots.  Off-orbit inputs (b^2 + c^2 > 0)
    always cross: if they did not, the extremal constant would force both
    coefficient bounds, which contradict each other; NoCrossing therefore
    carries a certificate naming the bound that held.

    On [0, M] the sup of |f| is exactly c0, so the coefficient bounds hold
    with T = M and the window variation |f(t) - f(t+s)|, s <= kappa t,
    stays below ~(3/4) kappa (1 + kappa); with kappa = epsilon^2 that is
    within the epsilon^2 budget (the f1 guarantee checked by the tests).
    """
    config = config or WitnessConfig()
    if b * b + c * c == 0.0:
        raise ValueError("b and c both zero: the points share an orbit")
    delta = config.delta
    if max(abs(a), abs(b), abs(c)) >= delta:
        raise ValueError(f"coordinates must be below delta = {delta:.3g}")
    c0 = config.c0 if config.c0 is not None else solve_extremal_constant(1.0)
    kappa = config.resolve_kappa(epsilon)

    t_max = min(1.0 / abs(b) if b != 0.0 else math.inf,
                1.0 / math.sqrt(abs(c)) if c != 0.0 else math.inf)
    b2 = math.expm1(-2.0 * b)
    b3 = -math.exp(-3.0 * b) * c

    candidates = []
    for target in (c0, -c0):
        for r in _real_roots(b3, b2, -target):
            if 0.0 < r <= t_max:
                candidates.append(r)
    if not candidates:
        # fallback: dense scan + bisection, in case of degenerate numerics
        ts = np.linspace(0.0, t_max, 4097) if math.isfinite(t_max) else None
        if ts is not None:
            vals = np.abs(b2 * ts + b3 * ts * ts)
            hit = np.nonzero(vals >= c0)[0]
            if hit.size:
                lo, hi = ts[hit[0] - 1], ts[hit[0]]
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if abs(b2 * mid + b3 * mid * mid) >= c0:
                        hi = mid
                    else:
                        lo = mid
                candidates.append(hi)
    if not candidates:
        held = []
        if abs(b2) <= 0.25 / t_max:
            held.append(f"|e^-2b - 1| = {abs(b2):.3g} <= 1/(4 t_max)")
        if abs(b3) <= 0.25 / (t_max * t_max):
            held.append(f"|e^-3b c| = {abs(b3):.3g} <= 1/(4 t_max^2)")
        raise NoCrossing(
            "no |f| >= c0 crossing on [0, {:.6g}]; held bounds: {}".format(
                t_max, "; ".join(held) or "none"))

    return ShearWitness(M=float(min(candidates)), c0=float(c0), kappa=float(kappa),
                        epsilon=float(epsilon), coeff_linear=b2,
                        coeff_quadratic=b3, t_max=float(t_max))


def check_f1_window_stability(w: ShearWitness, n_t: int = 100,
                              n_s: int = 12) -> float:
    """Max of |f(t) - f(t+s)| over t in [kappa^-2, M], s in [0, kappa t].

    Empty window (M < kappa^-2) returns 0.  The f1 guarantee asserts this
    stays <= epsilon^2.
    """
    lo = w.kappa ** -2
    if w.M < lo:
        return 0.0
    ts = np.linspace(lo, w.M, n_t)
    worst = 0.0
    b2, b3 = w.coeff_linear, w.coeff_quadratic
    for t in ts:
        ss = np.linspace(0.0, w.kappa * t, n_s)
        ft = b2 * t + b3 * t * t
        fts = b2 * (t + ss) + b3 * (t + ss) ** 2
        worst = max(worst, float(np.abs(ft - fts).max()))
    return worst


# ---------------------------------------------------------------------------
# end-to-end divergence check
# ---------------------------------------------------------------------------

def divergence_regression_bound(coords: UXVCoords, t: float) -> float:
    """Frozen envelope for the compensated distance, calibrated once against
    the exact 2x2 product: covers the residual diag/lower entries |b|, |ct|,
    |c|, the a-offset, and the cubic remainder c^2 t^3."""
    a, b, c = coords.a, coords.b, coords.c
    return 5.0 * (abs(a) + abs(b) + abs(c) + abs(c) * t + (c * t) ** 2 * abs(t)) + 1e-12


def verify_horocycle_divergence(x: np.ndarray, coords: UXVCoords,
                                t_grid, compensated: bool = True
                                ) -> tuple[WitnessReport, dict]:
    """Compare raw and compensated orbit distances for a displaced pair.

    ``x`` is the displaced point; the base point is reconstructed so that
    x = exp(aU) exp(bX) exp(cV) base.  For each t the raw distance flows
    both points by t, the compensated one flows the base by chi(t).
    Returns the report and the per-t series (t, D_raw, D_comp, f).
    """
    x = as_matrix(x)
    if max(abs(coords.a), abs(coords.b), abs(coords.c)) >= 1e-2:
        raise ValueError("coordinates too large for the divergence chart")
    base = np.linalg.inv(coords.matrix()) @ x

    ts, raws, comps, offs = [], [], [], []
    for t in t_grid:
        t = float(t)
        ht_x = expm(t * U_MAT) @ x
        raw = group_dist(ht_x, expm(t * U_MAT) @ base)
        comp = group_dist(ht_x, expm(chi(t, coords.b, coords.c) * U_MAT) @ base)
        ts.append(t)
        raws.append(raw)
        comps.append(comp)
        offs.append(shear_offset(t, coords.b, coords.c))

    series = {"t": ts, "D_raw": raws, "D_comp": comps, "f": offs}
    max_comp = max(comps) if comps else 0.0
    bound = max(divergence_regression_bound(coords, t) for t in ts) if ts else 0.0
    passed = (max_comp <= bound) if compensated else True
    report = WitnessReport(
        experiment="horo-divergence",
        inputs={"a": coords.a, "b": coords.b, "c": coords.c,
                "t_max": ts[-1] if ts else 0.0, "samples": len(ts)},
        M=None,
        passed=passed,
        residuals={"max_D_comp": max_comp, "regression_bound": bound,
                   "max_D_raw": max(raws) if raws else 0.0},
    )
    return report, series
