"""Cone membership and subsolution criteria for hypercritical phases.

With Theta(lam) = sum_i arccot(lam_i), the hypercritical cone is
Gamma = { lam : 0 < Theta(lam) < pi/2 }.  A C-subsolution in the sense of
the bounded-level-set definition is characterised by the closed criterion

    max_j sum_{i != j} arccot(lam_i)  <  hat_theta,

and the quantitative parabolic margin at a node is

    min_i [ cot( sum_{j != i} arccot(lam_j) ) - (dt_u + cot hat_theta) ].

For n = 1 the inner sums are empty, cot(0+) = +inf, and the margin
criterion is vacuous; the report says so instead of inventing a number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ProblemConfig
from .errors import PhaseBranchError
from .grid import ScalarField
from .hessian import HermitianField, complex_hessian
from .spectral import arccot, cot, lagrangian_phase, _eigvals_batch

_C1_TOL = 1e-12
_MAX_LISTED = 32  # cap stored violation records


def in_gamma(lam, sigma: float | None = None):
    """Whether Theta(lam) lies in (0, sigma), sigma defaulting to pi/2.

    Accepts a single eigenvalue vector or an array of them (last axis).
    """
    limit = np.pi / 2 if sigma is None else float(sigma)
    th = lagrangian_phase(lam)
    out = (th > 0.0) & (th < limit)
    if np.ndim(out) == 0:
        return bool(out)
    return out


@dataclass
class ConeReport:
    """Outcome of the closed subsolution criterion on a Hessian field."""

    flags: np.ndarray          # per interior node, True where criterion holds
    worst: float               # max over nodes of max_j sum_{i!=j} arccot lam_i
    worst_node: tuple
    hat_theta: float

    @property
    def ok(self) -> bool:
        return bool(np.all(self.flags))


def elliptic_subsolution_check(hfield: HermitianField, hat_theta: float) -> ConeReport:
    """Evaluate max_j sum_{i != j} arccot(lam_i) < hat_theta per node."""
    lam = _eigvals_batch(hfield.values, hfield.grid.n)
    th = lagrangian_phase(lam)
    # the max over j removes the smallest arccot, i.e. the largest eigenvalue
    worst_dir = th - arccot(lam[..., 0])
    flags = worst_dir < hat_theta
    worst_node = np.unravel_index(int(np.argmax(worst_dir)), worst_dir.shape)
    return ConeReport(
        flags=flags,
        worst=float(np.max(worst_dir)),
        worst_node=tuple(int(i) for i in worst_node),
        hat_theta=float(hat_theta),
    )


@dataclass
class MarginReport:
    """Parabolic subsolution margin; vacuous (and +inf) when n = 1."""

    margin: float
    vacuous: bool
    worst_node: Optional[tuple] = None
    worst_direction: Optional[int] = None
    note: str = ""


def parabolic_margin(hfield: HermitianField, dt_u, hat_theta: float) -> MarginReport:
    """min over nodes and directions of the parabolic margin.

    dt_u is the time derivative of the candidate subsolution on interior
    nodes (ScalarField, interior-shaped array, or None meaning zero).
    """
    grid = hfield.grid
    n = grid.n
    if n == 1:
        return MarginReport(
            margin=float("inf"),
            vacuous=True,
            note="n = 1: empty partial sums make the criterion unconditional",
        )
    if dt_u is None:
        dtv = 0.0
    elif isinstance(dt_u, ScalarField):
        dtv = dt_u.interior()
    else:
        dtv = np.asarray(dt_u, dtype=np.float64)
        if dtv.shape != grid.interior_shape:
            raise ValueError(
                f"dt_u shape {dtv.shape} does not match interior {grid.interior_shape}"
            )
    lam = _eigvals_batch(hfield.values, n)
    th = lagrangian_phase(lam)
    partial = th[..., None] - arccot(lam)  # sum over j != i, per direction i
    if np.any(partial <= 0.0) or np.any(partial >= np.pi):
        bad_flat = int(np.argmax((partial <= 0.0) | (partial >= np.pi)))
        bad = np.unravel_index(bad_flat, partial.shape)
        raise PhaseBranchError(
            f"partial phase sum leaves (0, pi) at node {bad[:-1]}, direction {bad[-1]}"
        )
    margins = cot(partial) - (np.asarray(dtv)[..., None] + cot(hat_theta))
    flat = int(np.argmin(margins))
    worst = np.unravel_index(flat, margins.shape)
    return MarginReport(
        margin=float(np.min(margins)),
        vacuous=False,
        worst_node=tuple(int(i) for i in worst[:-1]),
        worst_direction=int(worst[-1]),
    )


@dataclass
class CompatibilityReport:
    c1_ok: bool
    c1_defect: float
    initial_phase_ok: bool
    c2_ok: bool
    violations: list
    sampled_times: tuple

    @property
    def passed(self) -> bool:
        return self.c1_ok and self.initial_phase_ok and self.c2_ok

    def summary(self) -> str:
        bits = [
            f"C1 boundary agreement: {'ok' if self.c1_ok else 'VIOLATED'} "
            f"(sup defect {self.c1_defect:.3e})",
            f"initial data phase in (0, pi/2): "
            f"{'ok' if self.initial_phase_ok else 'VIOLATED'}",
            f"C2 boundary phase band: {'ok' if self.c2_ok else 'VIOLATED'}",
        ]
        return "; ".join(bits)


def check_compatibility(config: ProblemConfig) -> CompatibilityReport:
    """Check C1/C2 admissibility of the configured initial/boundary data.

    C1: psi(., 0) equals the initial potential on the closed box (1e-12).
    (1.2): Theta(Hess of the initial data) lies in (0, pi/2) at interior
    nodes.  C2: theta0 < Theta(Hess psi(., t)) < pi/2 - theta0 at interior
    nodes for sampled times t in [0, t_end].
    """
    grid = config.build_grid()
    phi = config.initial.sample(grid, 0.0)
    psi0 = config.boundary.sample(grid, 0.0)
    violations = []

    c1_defect = float(np.max(np.abs(psi0.values - phi.values)))
    c1_ok = c1_defect <= _C1_TOL
    if not c1_ok:
        violations.append({"condition": "C1", "t": 0.0, "value": c1_defect})

    lam0 = _eigvals_batch(complex_hessian(phi).values, grid.n)
    th0 = lagrangian_phase(lam0)
    bad0 = (th0 <= 0.0) | (th0 >= np.pi / 2)
    initial_phase_ok = not bool(np.any(bad0))
    if not initial_phase_ok:
        for flat in np.flatnonzero(bad0.ravel())[:_MAX_LISTED]:
            node = np.unravel_index(int(flat), th0.shape)
            violations.append({
                "condition": "(1.2)",
                "t": 0.0,
                "node": tuple(int(i) for i in node),
                "value": float(th0.ravel()[flat]),
            })

    times = tuple(np.linspace(0.0, config.t_end, 5))
    c2_ok = True
    lo_band, hi_band = config.theta0, np.pi / 2 - config.theta0
    for t in times:
        psi_t = psi0 if (t == 0.0 or not config.boundary.time_dependent) \
            else config.boundary.sample(grid, t)
        lam_t = _eigvals_batch(complex_hessian(psi_t).values, grid.n)
        th_t = lagrangian_phase(lam_t)
        bad = (th_t <= lo_band) | (th_t >= hi_band)
        if np.any(bad):
            c2_ok = False
            for flat in np.flatnonzero(bad.ravel())[:_MAX_LISTED]:
                node = np.unravel_index(int(flat), th_t.shape)
                violations.append({
                    "condition": "C2",
                    "t": float(t),
                    "node": tuple(int(i) for i in node),
                    "value": float(th_t.ravel()[flat]),
                })
        if not config.boundary.time_dependent:
            break

    return CompatibilityReport(
        c1_ok=c1_ok,
        c1_defect=c1_defect,
        initial_phase_ok=initial_phase_ok,
        c2_ok=c2_ok,
        violations=violations,
        sampled_times=times,
    )
