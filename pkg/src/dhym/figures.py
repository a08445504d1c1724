"""Static matplotlib renderings of run diagnostics, written next to the CSV."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def flow_summary_figure(rows, hat_theta: float, path):
    """2x2 panel: J, dissipation, phase residual, phase envelope vs time."""
    ts = np.asarray([r.t for r in rows])
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), constrained_layout=True)

    ax = axes[0, 0]
    ax.plot(ts, [r.j for r in rows], lw=1.2)
    ax.set_title("J functional")
    ax.set_xlabel("t")

    ax = axes[0, 1]
    s = np.asarray([r.s for r in rows])
    if np.any(s > 0):
        ax.semilogy(ts, np.maximum(s, 1e-300), lw=1.2)
    else:
        ax.plot(ts, s, lw=1.2)
    ax.set_title("dissipation S")
    ax.set_xlabel("t")

    ax = axes[1, 0]
    res = np.asarray([r.residual for r in rows])
    if np.any(res > 0):
        ax.semilogy(ts, np.maximum(res, 1e-300), lw=1.2)
    else:
        ax.plot(ts, res, lw=1.2)
    ax.set_title("sup |cot Θ − cot θ̂|")
    ax.set_xlabel("t")

    ax = axes[1, 1]
    ax.plot(ts, [r.theta_min for r in rows], lw=1.2, label="Θ min")
    ax.plot(ts, [r.theta_max for r in rows], lw=1.2, label="Θ max")
    ax.axhline(hat_theta, color="k", ls="--", lw=0.8, label="θ̂")
    ax.set_title("phase envelope")
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize=8)

    fig.savefig(path, dpi=130)
    plt.close(fig)


def newton_trace_figure(trace, path):
    """Residual history of the damped Newton iteration (semilog)."""
    its = [i for i, _, _ in trace]
    res = [max(r, 1e-300) for _, r, _ in trace]
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.semilogy(its, res, marker="o", lw=1.2)
    ax.set_xlabel("Newton iteration")
    ax.set_ylabel("sup residual")
    ax.set_title("stationary solve convergence")
    fig.savefig(path, dpi=130)
    plt.close(fig)


def phase_histogram_figure(theta: np.ndarray, hat_theta: float, path):
    """Distribution of the Lagrangian phase over interior nodes."""
    values = np.asarray(theta).ravel()
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo < 1e-9:         # stationary runs: all nodes share one phase
        lo, hi = lo - 1e-3, hi + 1e-3
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.hist(values, bins=np.linspace(lo, hi, 61), color="tab:blue", alpha=0.8)
    ax.axvline(hat_theta, color="k", ls="--", lw=0.8, label="θ̂")
    ax.axvline(math.pi / 2, color="r", ls=":", lw=0.8, label="π/2")
    ax.set_xlabel("Θ")
    ax.set_ylabel("nodes")
    ax.set_title("phase distribution")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=130)
    plt.close(fig)
