"""Damped Newton iteration for the stationary equation cot Theta = cot hat_theta.

Each outer step freezes the linearization

    (L delta)_x = Re tr( F(Hess_C u)(x) * conj(Hess_C delta)(x) ),

solves L delta = residual matrix-free with damped Jacobi sweeps (the
diagonal of L on an isotropic grid is -tr F / h^2), and backtracks the
update until the sup-norm residual decreases while the phase stays inside
the guard band.  The residual operator is literally the flow velocity, so
a Newton fixed point is a stationary point of the flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LinearSolveError, NewtonStallError, PhaseBranchError
from .grid import GridSpec, ScalarField
from .hessian import complex_hessian
from .spectral import PhaseData, phase_data
from . import flow

_DEFAULT_OMEGA = 2.0 / 3.0


def residual(u: ScalarField, hat_theta: float,
             phase: PhaseData | None = None) -> np.ndarray:
    """Stationary defect cot Theta(Hess u) - cot hat_theta (interior)."""
    return flow.rhs(u, hat_theta, phase=phase)


def _apply_operator(grid: GridSpec, f_matrix: np.ndarray,
                    values: np.ndarray) -> np.ndarray:
    """Re tr(F conj(Hess_C v)) on interior nodes for full-grid values v."""
    H = complex_hessian(ScalarField(grid, values)).values
    return np.einsum("...jk,...jk->...", f_matrix, np.conj(H)).real


def linear_solve(grid: GridSpec, f_matrix: np.ndarray, rhs_values: np.ndarray,
                 rtol: float = 1e-10, max_iter: int = 200000,
                 omega: float = _DEFAULT_OMEGA) -> ScalarField:
    """Solve the frozen-coefficient linearized equation, zero boundary data.

    Damped Jacobi on the negative-definite operator: the diagonal entry at
    every interior node is -tr F / h^2 (each second-difference stencil
    contributes -2/h^2 to its own node, weighted by the matching diagonal
    entry of F).  Convergence is declared on the relative sup-norm defect.
    """
    if rhs_values.shape != grid.interior_shape:
        raise ValueError(
            f"rhs shape {rhs_values.shape} does not match interior "
            f"{grid.interior_shape}"
        )
    b = np.asarray(rhs_values, dtype=np.float64)
    bnorm = float(np.max(np.abs(b)))
    x = np.zeros(grid.shape, dtype=np.float64)
    if bnorm == 0.0:
        return ScalarField(grid, x)
    f_trace = np.einsum("...ii->...", f_matrix).real
    diag = -f_trace / (grid.h * grid.h)
    if np.any(diag >= 0.0) or not np.all(np.isfinite(diag)):
        raise LinearSolveError(
            "linearization trace must be positive everywhere; cannot iterate"
        )
    interior = grid.interior_slice
    for _ in range(max_iter):
        defect = b - _apply_operator(grid, f_matrix, x)
        if float(np.max(np.abs(defect))) <= rtol * bnorm:
            return ScalarField(grid, x)
        x[interior] += omega * defect / diag
    raise LinearSolveError(
        f"no convergence to rtol={rtol:.1e} in {max_iter} sweeps "
        f"(trace range [{float(np.min(f_trace)):.3e}, "
        f"{float(np.max(f_trace)):.3e}])"
    )


@dataclass
class NewtonOptions:
    tol: float = 1e-10
    max_iterations: int = 100
    damping_floor: float = 1e-6
    guard: float = 1e-3
    linear_rtol: float = 1e-12
    linear_max_iter: int = 200000
    omega: float = _DEFAULT_OMEGA


@dataclass
class NewtonState:
    u: ScalarField
    residual_sup: float
    iteration: int
    damping: float
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, residual, damping)


def newton_solve(initial: ScalarField, hat_theta: float,
                 options: NewtonOptions | None = None) -> NewtonState:
    """Damped Newton from an admissible initial potential.

    The boundary values of ``initial`` are held fixed.  Backtracking
    halves the damping until the sup residual strictly decreases and the
    phase stays in (guard, pi - guard); falling below the damping floor
    raises NewtonStallError with the last residual.
    """
    opts = options or NewtonOptions()
    grid = initial.grid
    u = initial.copy()
    phase = phase_data(complex_hessian(u))
    _require_band(phase, opts.guard, "initial potential")
    trace: list = []
    damping = 1.0
    for iteration in range(opts.max_iterations + 1):
        r = residual(u, hat_theta, phase=phase)
        rsup = float(np.max(np.abs(r)))
        trace.append((iteration, rsup, damping))
        if rsup <= opts.tol:
            return NewtonState(u=u, residual_sup=rsup, iteration=iteration,
                               damping=damping, converged=True, trace=trace)
        if iteration == opts.max_iterations:
            return NewtonState(u=u, residual_sup=rsup, iteration=iteration,
                               damping=damping, converged=False, trace=trace)
        delta = linear_solve(grid, phase.f_matrix, r, rtol=opts.linear_rtol,
                             max_iter=opts.linear_max_iter, omega=opts.omega)
        damping = 1.0
        while True:
            candidate = ScalarField(grid, u.values - damping * delta.values)
            cand_phase = phase_data(complex_hessian(candidate))
            th = cand_phase.theta
            in_band = bool(np.all(th > opts.guard) and
                           np.all(th < np.pi - opts.guard))
            if in_band:
                cand_r = residual(candidate, hat_theta, phase=cand_phase)
                if float(np.max(np.abs(cand_r))) < rsup:
                    u, phase = candidate, cand_phase
                    break
            damping *= 0.5
            if damping < opts.damping_floor:
                raise NewtonStallError(
                    f"no residual decrease above damping {opts.damping_floor:.1e} "
                    f"at iteration {iteration}; residual stuck at {rsup:.6e}"
                )
    raise AssertionError("unreachable")


def _require_band(phase: PhaseData, guard: float, what: str):
    th = phase.theta
    if not (np.all(th > guard) and np.all(th < np.pi - guard)):
        raise PhaseBranchError(
            f"{what}: phase range [{float(np.min(th)):.6f}, "
            f"{float(np.max(th)):.6f}] leaves the guard band "
            f"({guard:.1e}, pi - {guard:.1e})"
        )
