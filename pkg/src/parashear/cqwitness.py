"""Centralizer-shear windows for unipotent generators with GR > 3.

Given a chain (X_0, X_1) with [U, X_1] = X_0 and [U, X_0] = 0, the nearby
point y' = exp(X_1/k) y drifts along the orbit of y at speed t/k in the
X_0 direction; applying the commuting correction exp(-(L/k) X_0) keeps the
two orbits pointwise close on the window [L, L + kappa L].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flows import FlowSpec, flow_point, group_dist
from .liealg import ChainBasis, as_matrix, bracket, expm, frobenius, gr_invariant
from .reporting import WindowSample, WitnessReport

CHAIN_TOL = 1e-10

ERGODICITY_ASSUMPTION = (
    "ergodicity of the combined centralizer/flow shifts is assumed, not verified"
)


class NoQualifyingChain(Exception):
    """Every chain of length >= 2 bottoms out at a multiple of the generator."""


class WindowOutOfRange(Exception):
    """Window start L beyond the terminal time k."""


def _independent_of(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    """True if b is not numerically a scalar multiple of a."""
    stacked = np.column_stack([a.reshape(-1), b.reshape(-1)])
    s = np.linalg.svd(stacked, compute_uv=False)
    return s[-1] > tol * max(1.0, s[0])


def select_noncentral_chain(cb: ChainBasis, u: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """First chain of length >= 2 whose bottom is independent of ``u``.

    Returns the bottom pair (X_0, X_1).  Raises NoQualifyingChain when the
    GR invariant is <= 3, i.e. the only nontrivial chain is the one ending
    at the generator itself.
    """
    u = as_matrix(u)
    if gr_invariant(cb) <= 3:
        raise NoQualifyingChain(
            "GR invariant <= 3: no centralizer direction beyond the generator")
    for chain in cb.chains:
        if len(chain) >= 2 and _independent_of(u, chain[0]):
            return chain[0], chain[1]
    raise NoQualifyingChain("no chain of length >= 2 with independent bottom")


def verify_commutation(u: np.ndarray, x0: np.ndarray, x1: np.ndarray,
                       t: float, k: int) -> float:
    """Residual of exp(tU) exp(X_1/k) exp(-tU) = exp(X_1/k + (t/k) X_0).

    The identity is exact when ad_U X_1 = X_0 and ad_U X_0 = 0, since the
    adjoint series terminates after the linear term.
    """
    u = as_matrix(u)
    left = expm(t * u) @ expm(x1 / k) @ expm(-t * u)
    right = expm(x1 / k + (t / k) * x0)
    return frobenius(left - right)


@dataclass
class CqSchedule:
    """Window schedule for one epsilon: kappa = eps^2, delta = eps^4 / (10 N),
    terminal index k = M >= 1/delta."""

    epsilon: float
    N: int
    k: int
    generator: np.ndarray
    chain: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.k < 1.0 / self.delta:
            raise ValueError(f"k must be >= 1/delta = {1.0 / self.delta:.6g}")
        u = as_matrix(self.generator)
        x0, x1 = self.chain
        if frobenius(bracket(u, x0)) > CHAIN_TOL:
            raise ValueError("chain bottom is not in the centralizer of the generator")
        if frobenius(bracket(u, x1) - x0) > CHAIN_TOL:
            raise ValueError("chain does not descend: [U, X_1] != X_0")
        if not _independent_of(u, x0):
            raise ValueError("chain bottom is a multiple of the generator")

    @property
    def kappa(self) -> float:
        return self.epsilon ** 2

    @property
    def delta(self) -> float:
        return self.epsilon ** 4 / (10.0 * self.N)


def make_schedule(u: np.ndarray, cb: ChainBasis, epsilon: float, N: int,
                  k: int | None = None) -> CqSchedule:
    """Build a schedule from a chain basis, picking the first qualifying chain.

    ``k`` defaults to the least integer >= 1/delta, which also guarantees
    k >= N and k > kappa^{-2}.
    """
    x0, x1 = select_noncentral_chain(cb, u)
    delta = epsilon ** 4 / (10.0 * N)
    if k is None:
        k = int(math.ceil(1.0 / delta))
    return CqSchedule(epsilon=epsilon, N=N, k=k, generator=as_matrix(u),
                      chain=(x0, x1))


def cq_window_check(schedule: CqSchedule, y: np.ndarray, L: float,
                    samples: int = 1000) -> WitnessReport:
    """Sample D(t) = dist(u_t y, shifted u_t y') on [L, L + kappa L].

    y' = exp(X_1/k) y and the shift is the X_0-flow by -L/k; the shift
    parameter stays in [-1, 0) precisely while L <= k.  Reports the max
    distance and the fraction of samples below epsilon (pointwise closeness
    makes the fraction 1 for the exact construction).
    """
    y = as_matrix(y)
    kappa = schedule.kappa
    k = schedule.k
    if L > k:
        raise WindowOutOfRange(f"L = {L:.6g} exceeds the terminal time k = {k}")
    if L < kappa ** -2:
        raise ValueError(f"L = {L:.6g} below the window floor kappa^-2 = {kappa ** -2:.6g}")
    u_flow = FlowSpec(schedule.generator)
    x0, x1 = schedule.chain
    shift_flow = FlowSpec(x0)
    y_prime = expm(x1 / k) @ y
    shift = -L / k

    times = np.linspace(L, L * (1.0 + kappa), samples)
    dists = np.empty(samples)
    for i, t in enumerate(times):
        a = flow_point(u_flow, t, y)
        b = flow_point(shift_flow, shift, flow_point(u_flow, t, y_prime))
        dists[i] = group_dist(a, b)
    max_d = float(dists.max())
    fraction = float(np.mean(dists < schedule.epsilon))

    return WitnessReport(
        experiment="cq-window",
        inputs={"epsilon": schedule.epsilon, "N": schedule.N, "k": k,
                "L": float(L), "samples": samples},
        M=float(k),
        windows=[WindowSample(L=float(L), shift=float(shift),
                              max_distance=max_d, fraction=fraction)],
        passed=bool(fraction >= 1.0 - schedule.epsilon and max_d < schedule.epsilon),
        assumptions=[ERGODICITY_ASSUMPTION],
        residuals={"commutation": verify_commutation(
            schedule.generator, x0, x1, min(float(L), 100.0), k)},
    )


def cq_window_sweep(schedule: CqSchedule, y: np.ndarray, n_windows: int = 20,
                    samples: int = 1000) -> WitnessReport:
    """Run cq_window_check over a log-spaced L grid from kappa^{-2} to k."""
    kappa = schedule.kappa
    grid = np.geomspace(kappa ** -2, float(schedule.k), n_windows)
    grid[-1] = float(schedule.k)    # land on k exactly: terminal shift is -1
    windows = []
    worst = 0.0
    for L in grid:
        rep = cq_window_check(schedule, y, float(L), samples=samples)
        windows.extend(rep.windows)
        worst = max(worst, rep.windows[0].max_distance)
    passed = all(w.fraction >= 1.0 - schedule.epsilon and
                 w.max_distance < schedule.epsilon for w in windows)
    return WitnessReport(
        experiment="cq-verify",
        inputs={"epsilon": schedule.epsilon, "N": schedule.N, "k": schedule.k,
                "n_windows": n_windows, "samples": samples},
        M=float(schedule.k),
        windows=windows,
        passed=passed,
        assumptions=[ERGODICITY_ASSUMPTION],
        residuals={"max_window_distance": worst},
    )
