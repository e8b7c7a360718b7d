"""Skew-shift special flows: continued fractions, exact long-orbit phases,
Birkhoff sums, suspension flow evaluation, and shear-time witnesses.

Orbit phases use a fixed-point integer representation of alpha (scale
2^100) at block boundaries, so the quadratic phase j(j-1)/2 * alpha is
reduced mod 1 without cancellation out to j ~ 1e8.  Inside a block the
recursion y_{j0+r} = y_{j0} + r x_{j0} + r(r-1)/2 alpha + r beta (mod 1)
is evaluated in extended precision and cast to float64 for the trig work.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .reporting import WindowSample, WitnessReport

TWO_PI = 2.0 * math.pi
FIXED_BITS = 100
FIXED_SCALE = 1 << FIXED_BITS
DEFAULT_BLOCK = 1 << 16
CF_WORK_DPS = 60


class PrecisionExhausted(Exception):
    """Continued fraction ran past what the working precision supports."""


class NotFound(Exception):
    """No shear crossing within the scanned range."""


class WindowFail(Exception):
    """A window missed the required closeness fraction."""

    def __init__(self, L: float, fraction: float, report=None):
        super().__init__(f"window L = {L:.6g} reached fraction {fraction:.4f}")
        self.L = L
        self.fraction = fraction
        self.report = report


# ---------------------------------------------------------------------------
# continued fractions
# ---------------------------------------------------------------------------

NAMED_ALPHAS = {
    "golden": lambda: (mp.sqrt(5) - 1) / 2,
    "sqrt2": lambda: mp.sqrt(2) - 1,
}


def _to_mpf(alpha) -> mp.mpf:
    if isinstance(alpha, str):
        key = alpha.strip().lower()
        if key in NAMED_ALPHAS:
            with mp.workdps(CF_WORK_DPS):
                return mp.mpf(NAMED_ALPHAS[key]())
        return mp.mpf(alpha)
    return mp.mpf(alpha)


@dataclass
class ContinuedFraction:
    alpha: mp.mpf
    partial_quotients: list[int]
    denominators: list[int]

    @property
    def max_quotient(self) -> int:
        return max(self.partial_quotients)

    def is_bounded_type(self, c_alpha: int) -> bool:
        return self.max_quotient <= c_alpha


def continued_fraction(alpha, depth: int = 30) -> ContinuedFraction:
    """Partial quotients and convergent denominators of alpha in (0, 1).

    Denominators follow q_{n+1} = a_{n+1} q_n + q_{n-1} with q_0 = 1, in
    exact integer arithmetic.  Raises PrecisionExhausted when the remainder
    drops below the resolution of the working precision before ``depth``
    quotients are produced (near-rational input, or depth too ambitious).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    with mp.workdps(CF_WORK_DPS):
        x = _to_mpf(alpha)
        if not 0 < x < 1:
            raise ValueError("alpha must lie in (0, 1)")
        cutoff = mp.mpf(10) ** (-(CF_WORK_DPS - 10))
        quotients: list[int] = []
        denoms = [1]
        prev = 0
        while len(quotients) < depth:
            if x < cutoff:
                raise PrecisionExhausted(
                    f"remainder below precision after {len(quotients)} quotients")
            inv = 1 / x
            a = int(mp.floor(inv))
            quotients.append(a)
            denoms.append(a * denoms[-1] + prev)
            prev = denoms[-2]
            x = inv - a
        return ContinuedFraction(alpha=_to_mpf(alpha), partial_quotients=quotients,
                                 denominators=denoms)


# ---------------------------------------------------------------------------
# the skew shift and its exact orbit engine
# ---------------------------------------------------------------------------

def fixed_point(value) -> int:
    """Round a real to the 2^-100 fixed-point grid, reduced mod 1.

    Integers are taken to be fixed-point values already; passing an orbit
    point through unchanged keeps long compositions exact (a float64
    rounding of the point would itself shear like delta * n^(3/2)).
    """
    if isinstance(value, (int, np.integer)):
        return int(value) % FIXED_SCALE
    with mp.workdps(CF_WORK_DPS):
        v = mp.mpf(value)
        return int(mp.floor((v - mp.floor(v)) * FIXED_SCALE + mp.mpf("0.5"))) % FIXED_SCALE


_fixed = fixed_point


@dataclass
class SkewShift:
    """T(x, y) = (x + alpha, y + x + beta) on the 2-torus."""

    alpha: object
    beta: object = 0.0
    check_depth: int = 30

    def __post_init__(self):
        self.alpha_int = _fixed(_to_mpf(self.alpha))
        self.beta_int = _fixed(_to_mpf(self.beta))
        with mp.workdps(CF_WORK_DPS):
            alpha_exact = mp.mpf(self.alpha_int) / FIXED_SCALE
        self.cf = continued_fraction(alpha_exact, depth=self.check_depth)

    @property
    def alpha_float(self) -> float:
        return self.alpha_int / FIXED_SCALE

    @property
    def beta_float(self) -> float:
        return self.beta_int / FIXED_SCALE


def _triangular(j: int) -> int:
    return j * (j - 1) // 2


def skew_iterate_fixed(ss: SkewShift, n: int, xi: int, yi: int) -> tuple[int, int]:
    """T^n on the exact fixed-point grid; composes without rounding."""
    n = int(n)
    xn = (xi + n * ss.alpha_int) % FIXED_SCALE
    yn = (yi + n * xi + _triangular(n) * ss.alpha_int + n * ss.beta_int) % FIXED_SCALE
    return xn, yn


def skew_iterate(ss: SkewShift, n: int, x: float, y: float) -> tuple[float, float]:
    """Closed-form T^n(x, y) = (x + n a, y + n x + n(n-1)/2 a + n b) mod 1.

    Exact integer reduction of the quadratic phase; valid for negative n.
    """
    xn, yn = skew_iterate_fixed(ss, n, _fixed(x), _fixed(y))
    return xn / FIXED_SCALE, yn / FIXED_SCALE


def _use_extended() -> bool:
    return os.environ.get("PARASHEAR_PRECISION", "extended").strip() != "64"


_TABLE_CACHE: dict = {}


def _block_tables(alpha_int: int, beta_int: int, block: int, extended: bool):
    """Per-offset tables frac(r a) and frac(r(r-1)/2 a + r b), exact ints."""
    key = (alpha_int, beta_int, block, extended)
    if key not in _TABLE_CACHE:
        dtype = np.longdouble if extended else np.float64
        t_alpha = np.empty(block, dtype=dtype)
        t_quad = np.empty(block, dtype=dtype)
        acc_a = 0
        acc_q = 0
        scale = dtype(FIXED_SCALE)
        for r in range(block):
            t_alpha[r] = dtype(acc_a) / scale
            t_quad[r] = dtype(acc_q) / scale
            acc_q = (acc_q + acc_a + beta_int) % FIXED_SCALE   # quad(r+1) = quad(r) + r*a + b
            acc_a = (acc_a + alpha_int) % FIXED_SCALE
        _TABLE_CACHE[key] = (t_alpha, t_quad, np.arange(block, dtype=dtype))
    return _TABLE_CACHE[key]


class OrbitEngine:
    """Blockwise phases of one skew orbit, exact at block boundaries."""

    def __init__(self, ss: SkewShift, x0: float, y0: float,
                 block: int = DEFAULT_BLOCK, extended: bool | None = None):
        self.ss = ss
        self.block = block
        self.extended = _use_extended() if extended is None else extended
        self.x0_int = _fixed(x0)
        self.y0_int = _fixed(y0)
        self.t_alpha, self.t_quad, self.r_arr = _block_tables(
            ss.alpha_int, ss.beta_int, block, self.extended)
        self._dtype = np.longdouble if self.extended else np.float64

    def _bases(self, j0: int) -> tuple[int, int]:
        a, b = self.ss.alpha_int, self.ss.beta_int
        xj = (self.x0_int + j0 * a) % FIXED_SCALE
        yj = (self.y0_int + j0 * self.x0_int + _triangular(j0) * a + j0 * b) % FIXED_SCALE
        return xj, yj

    def phases_slice(self, j0: int, r0: int, r1: int
                     ) -> tuple[np.ndarray, np.ndarray]:
        """float64 phases (x_j, y_j) for j in [j0 + r0, j0 + r1), where j0 is
        a block base and 0 <= r0 <= r1 <= block."""
        xj_int, yj_int = self._bases(j0)
        dt = self._dtype
        xb = dt(xj_int) / dt(FIXED_SCALE)
        yb = dt(yj_int) / dt(FIXED_SCALE)
        xs = xb + self.t_alpha[r0:r1]
        xs -= np.floor(xs)
        # split the block base into an exact 26-bit head plus a small tail so
        # the r * x_j0 products round at the 2^-90 level, not 2^-64 * r
        hi = dt(xj_int >> (FIXED_BITS - 26)) / dt(1 << 26)
        lo = dt(xj_int & ((1 << (FIXED_BITS - 26)) - 1)) / dt(FIXED_SCALE)
        lin = self.r_arr[r0:r1] * hi
        lin -= np.floor(lin)
        lin += self.r_arr[r0:r1] * lo
        ys = yb + lin + self.t_quad[r0:r1]
        ys -= np.floor(ys)
        return np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)

    def block_phases(self, j0: int, count: int | None = None
                     ) -> tuple[np.ndarray, np.ndarray]:
        """float64 phases (x_j, y_j) for j in [j0, j0 + count)."""
        return self.phases_slice(j0, 0, self.block if count is None else count)

    def phases_range(self, n0: int, n1: int) -> tuple[np.ndarray, np.ndarray]:
        """Phases for j in [n0, n1), assembled across blocks."""
        if n1 <= n0:
            return np.empty(0), np.empty(0)
        xs_parts, ys_parts = [], []
        b = self.block
        j = n0
        while j < n1:
            j0 = (j // b) * b
            take_to = min(b, n1 - j0)
            xs, ys = self.phases_slice(j0, j - j0, take_to)
            xs_parts.append(xs)
            ys_parts.append(ys)
            j = j0 + take_to
        return np.concatenate(xs_parts), np.concatenate(ys_parts)


# ---------------------------------------------------------------------------
# trig-polynomial roofs
# ---------------------------------------------------------------------------

@dataclass
class RoofFunction:
    """Real trig polynomial on the 2-torus, stored as half-lattice terms
    const + sum_k [ac_k cos(2 pi (m x + n y)) + as_k sin(2 pi (m x + n y))]."""

    constant: float
    terms: list[tuple[int, int, float, float]] = field(default_factory=list)

    def __post_init__(self):
        for m, n, _, _ in self.terms:
            if (m, n) <= (0, 0):
                raise ValueError("half-lattice terms must have (m, n) > (0, 0)")
        amp = sum(math.hypot(ac, as_) for _, _, ac, as_ in self.terms)
        self.constant_floor = self.constant - amp
        self.constant_ceiling = self.constant + amp
        if self.constant_floor <= 0.0:
            raise ValueError(
                f"roof not certified positive: floor = {self.constant_floor:.4g}")

    @property
    def is_trivial(self) -> bool:
        return not self.terms

    def __call__(self, x, y):
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(xs, ys).shape, self.constant)
        for m, n, ac, as_ in self.terms:
            theta = TWO_PI * (m * xs + n * ys)
            if ac:
                out = out + ac * np.cos(theta)
            if as_:
                out = out + as_ * np.sin(theta)
        return out if out.shape else float(out)

    def coefficients(self) -> dict[tuple[int, int], complex]:
        """Full conjugate-symmetric coefficient map."""
        coeffs = {(0, 0): complex(self.constant)}
        for m, n, ac, as_ in self.terms:
            c = complex(ac / 2.0, -as_ / 2.0)
            coeffs[(m, n)] = c
            coeffs[(-m, -n)] = c.conjugate()
        return coeffs

    @staticmethod
    def from_rows(rows) -> "RoofFunction":
        """Build from (m, n, re, im) coefficient rows.

        Each row gives c_{m,n}.  The conjugate coefficient at (-m,-n) is
        implied; if both rows appear they must be conjugates of each other.
        A row at (0, 0) must be real.
        """
        constant = 0.0
        given: dict[tuple[int, int], complex] = {}
        for m, n, re, im in rows:
            m, n = int(m), int(n)
            if (m, n) == (0, 0):
                if abs(im) > 1e-14:
                    raise ValueError("constant coefficient must be real")
                constant += re
                continue
            if (m, n) in given:
                raise ValueError(f"duplicate coefficient row at {(m, n)}")
            given[(m, n)] = complex(re, im)
        half: dict[tuple[int, int], complex] = {}
        for (m, n), c in given.items():
            key = (m, n) if (m, n) > (0, 0) else (-m, -n)
            val = c if (m, n) > (0, 0) else c.conjugate()
            if key in half and abs(half[key] - val) > 1e-12:
                raise ValueError(f"rows at {key} and {(-key[0], -key[1])} "
                                 "are not conjugate")
            half[key] = val
        terms = [(m, n, 2.0 * c.real, -2.0 * c.imag) for (m, n), c in sorted(half.items())]
        return RoofFunction(constant=constant, terms=terms)


def default_roof() -> RoofFunction:
    """1 + 0.2 cos(2 pi y) + 0.1 sin(2 pi x); floor 0.7, active y-frequency."""
    return RoofFunction(constant=1.0, terms=[(0, 1, 0.2, 0.0), (1, 0, 0.0, 0.1)])


def sobolev_norm(f: RoofFunction, s: float) -> float:
    """(sum |c_mn|^2 (1 + m^2 + n^2)^s)^(1/2), exact for trig polynomials."""
    total = 0.0
    for (m, n), c in f.coefficients().items():
        total += abs(c) ** 2 * (1.0 + m * m + n * n) ** s
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# Birkhoff sums
# ---------------------------------------------------------------------------

def _block_sum(vals: np.ndarray) -> float:
    """Block sum with an extended accumulator; keeps the only rounding at
    the final cast."""
    return float(np.sum(vals, dtype=np.longdouble))


def _sum_range(engine: OrbitEngine, f: RoofFunction, n0: int, n1: int) -> float:
    """fsum of f over orbit indices [n0, n1), blockwise."""
    parts = []
    b = engine.block
    j = n0
    while j < n1:
        j0 = (j // b) * b
        hi = min(j0 + b, n1)
        xs, ys = engine.phases_slice(j0, j - j0, hi - j0)
        parts.append(_block_sum(f(xs, ys)))
        j = hi
    return math.fsum(parts)


def birkhoff_sum(ss: SkewShift, f: RoofFunction, n: int, x, y) -> float:
    """S_n(f) = sum_{j=0}^{n-1} f(T^j(x,y)); 0 at n = 0; minus the backward
    sum for n < 0, so the cocycle identity S_{n+m} = S_n + S_m o T^n holds.

    x and y may be floats or exact fixed-point integers; the latter lets
    compositions S_m o T^n be evaluated without a rounding of the base
    point (whose own shear would swamp tight tolerances at large n).
    """
    n = int(n)
    engine = OrbitEngine(ss, x, y)
    if n == 0:
        return 0.0
    if n > 0:
        return _sum_range(engine, f, 0, n)
    return -_sum_range(engine, f, n, 0)


def birkhoff_sums(ss: SkewShift, f: RoofFunction, ns, x, y) -> np.ndarray:
    """S_n at many checkpoints in one forward pass per sign."""
    ns = np.asarray(ns, dtype=np.int64)
    engine = OrbitEngine(ss, x, y)
    out = np.zeros(len(ns))
    pos = ns > 0
    neg = ns < 0
    if pos.any():
        order = np.argsort(ns[pos])
        idxs = np.nonzero(pos)[0][order]
        parts, reached = [], 0
        for idx in idxs:
            target = int(ns[idx])
            if target > reached:
                parts.append(_sum_range(engine, f, reached, target))
                reached = target
            out[idx] = math.fsum(parts)
    if neg.any():
        order = np.argsort(-ns[neg])
        idxs = np.nonzero(neg)[0][order]
        parts, reached = [], 0
        for idx in idxs:
            target = int(ns[idx])
            if target < reached:
                parts.append(_sum_range(engine, f, target, reached))
                reached = target
            out[idx] = -math.fsum(parts)
    return out


# ---------------------------------------------------------------------------
# the suspension flow
# ---------------------------------------------------------------------------

@dataclass
class SpecialFlowPoint:
    x: float
    y: float
    s: float


def make_point(f: RoofFunction, x: float, y: float, s: float) -> SpecialFlowPoint:
    height = float(f(x, y))
    if not 0.0 <= s < height:
        raise ValueError(f"height {s} outside [0, {height})")
    return SpecialFlowPoint(x=x, y=y, s=s)


def special_flow_evaluate(ss: SkewShift, f: RoofFunction, t: float,
                          p: SpecialFlowPoint) -> SpecialFlowPoint:
    """Flow the suspension point by t: find the base level N with
    S_N <= s + t < S_{N+1} (monotone since f has a positive floor), by
    exponential bracketing plus binary search, then carry the remainder."""
    target = p.s + t
    engine = OrbitEngine(ss, p.x, p.y)

    def s_at(n: int) -> float:
        if n == 0:
            return 0.0
        return _sum_range(engine, f, 0, n) if n > 0 else -_sum_range(engine, f, n, 0)

    if target >= 0:
        lo, hi = 0, 1
        while s_at(hi) <= target:
            lo, hi = hi, hi * 2
    else:
        lo, hi = -1, 0
        while s_at(lo) > target:
            lo, hi = lo * 2, lo
    # invariant: S_lo <= target < S_hi is established by the bracketing
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if s_at(mid) <= target:
            lo = mid
        else:
            hi = mid
    n = lo
    xn, yn = skew_iterate(ss, n, p.x, p.y)
    return SpecialFlowPoint(x=xn, y=yn, s=target - s_at(n))


def circle_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def metric_df(p: SpecialFlowPoint, q: SpecialFlowPoint) -> float:
    """Base distance (max of coordinatewise circle distances) plus height gap."""
    return max(circle_dist(p.x, q.x), circle_dist(p.y, q.y)) + abs(p.s - q.s)


# ---------------------------------------------------------------------------
# shear scans over orbit pairs
# ---------------------------------------------------------------------------

class ShearScan:
    """Streaming Birkhoff-difference scan for a pair of nearby base points.

    Maintains block-boundary prefix sums of the roof along both orbits and
    of their difference a_n, so S_n and a_n at arbitrary n cost one block
    recomputation.  Kahan carries keep the long accumulations stable.
    """

    def __init__(self, ss: SkewShift, f: RoofFunction,
                 p1: tuple[float, float], p2: tuple[float, float],
                 block: int = DEFAULT_BLOCK):
        self.ss = ss
        self.f = f
        self.e1 = OrbitEngine(ss, p1[0], p1[1], block=block)
        self.e2 = OrbitEngine(ss, p2[0], p2[1], block=block)
        self.block = block
        self.block_s1 = [0.0]
        self.block_s2 = [0.0]
        self.block_a = [0.0]
        self._carry = [(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]  # Kahan (sum, comp)
        self.running_max = 0.0

    @property
    def scanned(self) -> int:
        return (len(self.block_a) - 1) * self.block

    @staticmethod
    def _kahan_add(state: tuple[float, float], value: float) -> tuple[float, float]:
        total, comp = state
        y = value - comp
        t = total + y
        comp = (t - total) - y
        return t, comp

    def _block_diff(self, k: int) -> np.ndarray:
        j0 = k * self.block
        x1, y1 = self.e1.block_phases(j0)
        x2, y2 = self.e2.block_phases(j0)
        return self.f(x1, y1) - self.f(x2, y2)

    def extend(self, n_stop: int, threshold: float | None = None,
               collector=None) -> int | None:
        """Scan forward to cover [0, n_stop).  With a threshold, stop at the
        end of the block containing the first n with |a_n| >= threshold and
        return that n.  ``collector(j0, a_vals)`` sees every new block."""
        while self.scanned < n_stop:
            k = len(self.block_a) - 1
            j0 = k * self.block
            x1, y1 = self.e1.block_phases(j0)
            x2, y2 = self.e2.block_phases(j0)
            f1 = self.f(x1, y1)
            f2 = self.f(x2, y2)
            d = f1 - f2
            a_vals = self.block_a[-1] + np.cumsum(d)
            self.running_max = max(self.running_max, float(np.abs(a_vals).max()))
            hit = None
            if threshold is not None:
                over = np.nonzero(np.abs(a_vals) >= threshold)[0]
                if over.size:
                    hit = j0 + int(over[0]) + 1
            if collector is not None:
                collector(j0, a_vals)
            self._carry[0] = self._kahan_add(self._carry[0], _block_sum(f1))
            self._carry[1] = self._kahan_add(self._carry[1], _block_sum(f2))
            self._carry[2] = self._kahan_add(self._carry[2], _block_sum(d))
            self.block_s1.append(self._carry[0][0])
            self.block_s2.append(self._carry[1][0])
            self.block_a.append(self._carry[2][0])
            if hit is not None:
                return hit
        return None

    def _prefix_at(self, n: int, which: int) -> float:
        """Prefix value at index n from block data plus an in-block partial."""
        if n < 0:
            raise ValueError("scan covers nonnegative indices only")
        k, r = divmod(n, self.block)
        base = (self.block_s1, self.block_s2, self.block_a)[which][k]
        if r == 0:
            return base
        if which == 2:
            d = self._block_diff(k)
            return base + _block_sum(d[:r])
        engine = (self.e1, self.e2)[which]
        xs, ys = engine.block_phases(k * self.block, r)
        return base + _block_sum(self.f(xs, ys))

    def s1_at(self, n: int) -> float:
        return self._prefix_at(n, 0)

    def s2_at(self, n: int) -> float:
        return self._prefix_at(n, 1)

    def a_at(self, n: int) -> float:
        return self._prefix_at(n, 2)

    def prefix_arrays(self, n0: int, n1: int) -> dict[str, np.ndarray]:
        """S1, S2, a at every n in [n0, n1], plus phases on [n0, n1)."""
        x1, y1 = self.e1.phases_range(n0, n1)
        x2, y2 = self.e2.phases_range(n0, n1)
        f1 = self.f(x1, y1)
        f2 = self.f(x2, y2)
        s1 = np.concatenate([[0.0], np.cumsum(f1)]) + self.s1_at(n0)
        s2 = np.concatenate([[0.0], np.cumsum(f2)]) + self.s2_at(n0)
        return {"n0": n0, "x1": x1, "y1": y1, "x2": x2, "y2": y2,
                "S1": s1, "S2": s2, "a": s1 - s2}


def shear_sequence(ss: SkewShift, f: RoofFunction,
                   p1: tuple[float, float], p2: tuple[float, float],
                   n_max: int, decimate: int = 1
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Streaming a_n = S_n(f)(p1) - S_n(f)(p2) for n <= n_max.

    Returns (n values, a_n, running max of |a|) decimated by ``decimate``;
    memory stays at one block per step regardless of n_max.
    """
    if n_max > 10 ** 8:
        raise ValueError("n_max capped at 1e8")
    scan = ShearScan(ss, f, p1, p2)
    ns, avals, rmax = [], [], []
    state = {"best": 0.0}

    def collect(j0: int, a_vals: np.ndarray) -> None:
        count = min(len(a_vals), n_max - j0)
        if count <= 0:
            return
        here = a_vals[:count]
        run = np.maximum.accumulate(np.abs(here))
        idx = np.arange(count)
        keep = idx[(j0 + idx + 1) % decimate == 0] if decimate > 1 else idx
        ns.append(j0 + keep + 1)
        avals.append(here[keep])
        rmax.append(np.maximum(run[keep], state["best"]))
        state["best"] = max(state["best"], float(run[-1]))

    scan.extend(n_max, collector=collect)
    return np.concatenate(ns), np.concatenate(avals), np.concatenate(rmax)


def fit_growth_exponent(ns: np.ndarray, running_max: np.ndarray,
                        n_min: int = 100) -> float:
    """Least-squares slope of log(max-so-far) against log n."""
    mask = (ns >= n_min) & (running_max > 0)
    if mask.sum() < 8:
        raise ValueError("not enough points for an exponent fit")
    slope, _ = np.polyfit(np.log(ns[mask]), np.log(running_max[mask]), 1)
    return float(slope)


@dataclass
class ScanConfig:
    d_factor: float = 1e3
    d_max: float = 1e5
    step_cap: int = 50_000_000


def _pair_scale(p1, p2) -> float:
    dx = circle_dist(p1[0], p2[0])
    dy = circle_dist(p1[1], p2[1])
    tx = dx ** (-2.0 / 3.0) if dx > 0 else math.inf
    ty = dy ** -2.0 if dy > 0 else math.inf
    return min(tx, ty)


def first_shear_time(ss: SkewShift, f: RoofFunction,
                     p1: tuple[float, float], p2: tuple[float, float],
                     threshold: float = 1.0, config: ScanConfig | None = None
                     ) -> tuple[int, dict]:
    """Least n with |a_n| > threshold, scanned on [0, D * T] where
    T = min(|dx|^{-2/3}, |dy|^{-2}); D starts at config.d_factor and doubles
    up to config.d_max on failure.  Constant roofs are rejected immediately
    (a_n is identically zero)."""
    if p1 == p2:
        raise ValueError("points coincide")
    if f.is_trivial:
        raise NotFound("roof is constant: the shear sequence is identically zero")
    config = config or ScanConfig()
    t_scale = _pair_scale(p1, p2)
    scan = ShearScan(ss, f, p1, p2)
    d = config.d_factor
    while True:
        n_stop = min(int(d * t_scale) + 1, config.step_cap)
        hit = scan.extend(n_stop, threshold=threshold)
        if hit is not None:
            return hit, {"T": t_scale, "ratio": hit / t_scale,
                         "max_abs": scan.running_max}
        if n_stop >= config.step_cap or d >= config.d_max:
            raise NotFound(
                f"no |a_n| > {threshold} within n <= {n_stop} "
                f"(D = {d:.3g}, T = {t_scale:.4g}, max |a_n| = {scan.running_max:.4g})")
        d *= 2.0


# ---------------------------------------------------------------------------
# window witnesses
# ---------------------------------------------------------------------------

def heis_r1prime_witness(ss: SkewShift, f: RoofFunction,
                         p1: tuple[float, float], p2: tuple[float, float],
                         epsilon: float, q: float = 1.0,
                         kappa: float | None = None, delta: float = 1e-3,
                         n_windows: int = 12, paper_literal: bool = False,
                         config: ScanConfig | None = None,
                         scan: ShearScan | None = None) -> WitnessReport:
    """Base-map shear witness: M' is the first n with |a_n| >= q, and on
    every window [L', (1+kappa)L'] both orbits stay epsilon-close while a_n
    stays within epsilon of a_{L'}.

    kappa defaults to epsilon^2 (epsilon^10 under the strict exponent
    schedule); q is the shear threshold, configurable because the time to
    reach it scales like (q / |dy|)^2.
    """
    if kappa is None:
        kappa = epsilon ** 10 if paper_literal else epsilon ** 2
    dx = circle_dist(p1[0], p2[0])
    dy = circle_dist(p1[1], p2[1])
    if max(dx, dy) >= delta:
        raise ValueError(f"points are {max(dx, dy):.3g} apart; need < delta = {delta:.3g}")
    if scan is None:
        scan = ShearScan(ss, f, p1, p2)
    config = config or ScanConfig()
    t_scale = _pair_scale(p1, p2)
    n_stop = min(int(config.d_factor * t_scale) + 1, config.step_cap)
    if f.is_trivial:
        raise NotFound("roof is constant: the shear sequence is identically zero")
    m_prime = scan.extend(n_stop, threshold=q)
    if m_prime is None:
        raise NotFound(
            f"no |a_n| >= {q} within n <= {n_stop} (max |a_n| = {scan.running_max:.4g})")

    floor = kappa ** -2
    if m_prime <= floor:
        raise WindowFail(floor, 0.0)
    grid = np.unique(np.ceil(np.geomspace(floor, m_prime, n_windows)).astype(np.int64))
    grid[-1] = m_prime
    windows = []
    ok = True
    for lp in grid:
        lo, hi = int(lp), int(math.ceil(lp * (1.0 + kappa))) + 1
        scan.extend(hi)
        arrs = scan.prefix_arrays(lo, hi)
        base_dist = np.maximum(
            _circle_dist_arr(arrs["x1"], arrs["x2"]),
            _circle_dist_arr(arrs["y1"], arrs["y2"]))
        a_ref = arrs["a"][0]
        a_dev = np.abs(arrs["a"] - a_ref)
        good = (base_dist < epsilon) & (a_dev[:-1] < epsilon)
        frac = float(np.mean(good))
        windows.append(WindowSample(L=float(lp), shift=float(a_ref),
                                    max_distance=float(a_dev.max()), fraction=frac))
        ok = ok and frac == 1.0
    terminal = scan.a_at(m_prime)
    ok = ok and abs(terminal) >= q * (1.0 - epsilon ** 2) and abs(terminal) > q / 2.0

    assumptions = ["roof nontriviality assumed, not verified"]
    if not ss.cf.is_bounded_type(20):
        assumptions.append(
            f"alpha may not be of bounded type: max quotient {ss.cf.max_quotient}")
    return WitnessReport(
        experiment="heis-r1prime",
        inputs={"epsilon": epsilon, "q": q, "kappa": kappa, "delta": delta,
                "dx": dx, "dy": dy, "alpha_quotients_max": ss.cf.max_quotient},
        M=float(m_prime),
        windows=windows,
        passed=bool(ok),
        assumptions=assumptions,
        residuals={"terminal_shear": float(terminal),
                   "window_floor": floor, "scale_T": t_scale},
    )


def _circle_dist_arr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.abs(a - b) % 1.0
    return np.minimum(d, 1.0 - d)


def lift_strong_r(ss: SkewShift, f: RoofFunction,
                  p: SpecialFlowPoint, p2: SpecialFlowPoint,
                  epsilon: float, report: WitnessReport,
                  q: float = 1.0, kappa: float | None = None,
                  n_windows: int = 20, samples: int = 1000,
                  strict: bool = True,
                  scan: ShearScan | None = None) -> WitnessReport:
    """Lift a passing base-map witness to the suspension flow.

    The terminal time M is aligned with the middle of the M'-th roof level,
    so the terminal shift p_M equals the base shear a_{M'}.  Every window
    [L, L + kappa L] is sampled and the fraction of flow times t with
    d(flow_t(p), flow_{t - p_L}(p2)) < epsilon is recorded; p_L is the base
    shear at the level the base point occupies at time L.  The flow-side
    kappa is half the base-side one so the sampled levels stay inside the
    validated base windows.
    """
    if (p.x, p.y) == (p2.x, p2.y):
        raise ValueError("base points coincide")
    if not report.passed:
        raise ValueError("base witness report did not pass")
    if abs(p.s - p2.s) >= max(report.inputs.get("delta", 1e-3), 1e-12):
        raise ValueError("heights differ by more than delta")
    base_kappa = report.inputs["kappa"]
    q = report.inputs.get("q", q)
    if kappa is None:
        kappa = base_kappa / 2.0
    m_prime = int(report.M)
    if scan is None:
        scan = ShearScan(ss, f, (p.x, p.y), (p2.x, p2.y))
    margin = int(math.ceil((1.0 + base_kappa) * m_prime)) + 2 * scan.block
    scan.extend(margin)

    xm, ym = skew_iterate(ss, m_prime, p.x, p.y)
    m_time = scan.s1_at(m_prime) - p.s + 0.5 * float(f(xm, ym))
    floor = kappa ** -2
    if m_time <= floor:
        raise WindowFail(floor, 0.0)

    grid = np.geomspace(floor, m_time, n_windows)
    grid[-1] = m_time
    windows = []
    ok = True
    for L in grid:
        n_lo = _level_index(scan, p.s + float(L))
        p_l = scan.a_at(n_lo)
        t_hi = float(L) * (1.0 + kappa)
        n_hi = _level_index(scan, p.s + t_hi) + 2
        arrs = scan.prefix_arrays(max(n_lo - 2, 0), n_hi + 1)
        ts = np.linspace(float(L), t_hi, samples)
        dists = _window_distances(arrs, ts, p.s, p2.s, p_l)
        frac = float(np.mean(dists < epsilon))
        windows.append(WindowSample(L=float(L), shift=float(p_l),
                                    max_distance=float(dists.max()), fraction=frac))
        if frac < 1.0 - epsilon:
            ok = False
            if strict:
                raise WindowFail(float(L), frac, report)
    p_m = windows[-1].shift
    ok = ok and abs(p_m) >= q / 2.0
    return WitnessReport(
        experiment="strong-r-lift",
        inputs={"epsilon": epsilon, "kappa": kappa, "q": q,
                "samples": samples, "n_windows": n_windows,
                "base_kappa": base_kappa, "heights": [p.s, p2.s]},
        M=float(m_time),
        windows=windows,
        passed=bool(ok),
        assumptions=list(report.assumptions),
        residuals={"terminal_shift": float(p_m), "base_M_prime": float(m_prime),
                   "terminal_base_shear": float(report.residuals.get("terminal_shear", 0.0))},
    )


def _level_index(scan: ShearScan, target: float) -> int:
    """Level N with S_N <= target < S_{N+1} for the first orbit.

    Binary over the block-boundary prefix sums, then one in-block cumsum.
    """
    bs = np.asarray(scan.block_s1)
    k = int(np.searchsorted(bs, target, side="right")) - 1
    k = min(max(k, 0), len(bs) - 2)
    j0 = k * scan.block
    xs, ys = scan.e1.block_phases(j0)
    prefix = bs[k] + np.concatenate([[0.0], np.cumsum(scan.f(xs, ys))])
    r = int(np.searchsorted(prefix, target, side="right")) - 1
    return j0 + min(max(r, 0), scan.block - 1)


def _window_distances(arrs: dict, ts: np.ndarray, s1: float, s2: float,
                      p_l: float) -> np.ndarray:
    """Suspension distances d(flow_t(p1), flow_{t - p_l}(p2)) vectorized
    over the window's flow times, using local prefix arrays."""
    n0 = arrs["n0"]
    S1, S2 = arrs["S1"], arrs["S2"]
    i1 = np.searchsorted(S1, s1 + ts, side="right") - 1
    i2 = np.searchsorted(S2, s2 + ts - p_l, side="right") - 1
    i1 = np.clip(i1, 0, len(arrs["x1"]) - 1)
    i2 = np.clip(i2, 0, len(arrs["x2"]) - 1)
    h1 = s1 + ts - S1[i1]
    h2 = s2 + ts - p_l - S2[i2]
    bx = _circle_dist_arr(arrs["x1"][i1], arrs["x2"][i2])
    by = _circle_dist_arr(arrs["y1"][i1], arrs["y2"][i2])
    return np.maximum(bx, by) + np.abs(h1 - h2)
