"""Figure rendering for report outputs.

Each helper takes the series already written as CSV and draws the matching
picture next to it.  Agg only; figures are a convenience companion to the
delimited data, never the primary record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def divergence_figure(series: dict, path) -> None:
    """Raw vs compensated orbit distance against time, log-log."""
    t = np.asarray(series["t"], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    mask = t > 0
    ax.loglog(t[mask], np.maximum(np.asarray(series["D_raw"])[mask], 1e-18),
              label="raw", color="#b33")
    ax.loglog(t[mask], np.maximum(np.asarray(series["D_comp"])[mask], 1e-18),
              label="compensated", color="#36c")
    ax.set_xlabel("t")
    ax.set_ylabel("orbit distance")
    ax.legend(frameon=False)
    _finish(fig, path)


def shear_series_figure(series: dict, path, envelope: float | None = None) -> None:
    """Birkhoff-difference trace a_n with its running max."""
    n = np.asarray(series["n"], dtype=float)
    a = np.asarray(series["a_n"], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(n, a, lw=0.6, color="#36c", label="a_n")
    if "running_max" in series:
        ax.plot(n, series["running_max"], lw=1.2, color="#b33", label="running max |a|")
    if envelope is not None:
        ax.axhline(envelope, color="k", ls=":", lw=0.8)
    ax.set_xlabel("n")
    ax.set_ylabel("shear")
    ax.legend(frameon=False)
    _finish(fig, path)


def window_figure(windows: list, epsilon: float, path) -> None:
    """Per-window closeness fraction and max distance over the L grid."""
    ls = np.array([w.L for w in windows])
    fracs = np.array([w.fraction for w in windows])
    dists = np.array([w.max_distance for w in windows])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 5.0), sharex=True)
    ax1.semilogx(ls, fracs, "o-", color="#36c", ms=3)
    ax1.axhline(1.0 - epsilon, color="k", ls=":", lw=0.8)
    ax1.set_ylabel("fraction close")
    ax1.set_ylim(-0.02, 1.02)
    ax2.loglog(ls, np.maximum(dists, 1e-18), "o-", color="#b33", ms=3)
    ax2.axhline(epsilon, color="k", ls=":", lw=0.8)
    ax2.set_xlabel("window start L")
    ax2.set_ylabel("max distance")
    _finish(fig, path)


def denominator_figure(denominators: list[int], path) -> None:
    """Convergent denominator growth, semilog."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(range(len(denominators)), denominators, "o-", ms=3, color="#36c")
    ax.set_xlabel("n")
    ax.set_ylabel("q_n")
    _finish(fig, path)
