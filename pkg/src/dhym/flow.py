"""Forward-Euler integration of  dt_u = cot Theta(Hess_C u) - cot hat_theta.

The step size tracks the parabolic stability limit of the linearized
operator: dt = safety * h^2 / (4 max F), where F is the trace of the
linearization coefficient matrix.  With safety <= 0.8 the explicit step
satisfies dt * lambda_max(L) <= 2 safety / 4 * 4 = 2 safety < 2, which also
keeps the discrete J-functional monotone.  A step whose result leaves the
guarded phase band (guard, pi - guard) is rejected and retried with half
the step; persistent rejection aborts the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import functionals
from .config import ProblemConfig
from .cone import check_compatibility
from .errors import ConfigError, PhaseBranchError, StabilityCollapseError
from .grid import GridSpec, ScalarField, boundary_mask, pairwise_sum
from .hessian import HermitianField, complex_hessian
from .spectral import PhaseData, cot, phase_data

_MAX_REJECTIONS = 20
_TIME_EPS = 1e-12


def rhs(u: ScalarField, hat_theta: float, phase: PhaseData | None = None) -> np.ndarray:
    """Flow velocity cot Theta - cot hat_theta on interior nodes.

    Validates the phase branch Theta in (0, pi); the cotangent route and
    the functional calculus are meaningless outside it.
    """
    if phase is None:
        phase = phase_data(complex_hessian(u))
    th = phase.theta
    bad = (th <= 0.0) | (th >= np.pi) | ~np.isfinite(th)
    if np.any(bad):
        flat = int(np.argmax(bad))
        node = np.unravel_index(flat, th.shape)
        coords = tuple(
            float(u.grid.lo[ax] + (node[ax] + 1) * u.grid.h)
            for ax in range(u.grid.dim)
        )
        raise PhaseBranchError(
            f"Lagrangian phase leaves (0, pi) at interior node "
            f"{tuple(int(i) for i in node)} (coords {coords})"
        )
    return phase.cot_theta - cot(hat_theta)


def stable_dt(phase: PhaseData, h: float, safety: float = 0.8,
              cap: float | None = None) -> float:
    """Largest admissible explicit step for the current linearization."""
    fmax = float(np.max(phase.f_trace))
    if not math.isfinite(fmax) or fmax <= 0.0:
        raise StabilityCollapseError(
            f"linearization trace max {fmax} leaves no stable step"
        )
    dt = safety * h * h / (4.0 * fmax)
    if cap is not None and cap > 0.0:
        dt = min(dt, cap)
    return dt


@dataclass
class FlowState:
    u: ScalarField
    t: float
    dt_last: float
    step_index: int


@dataclass
class DiagnosticsRow:
    """One sampled instant of the run.

    The first nine fields are the delimited-output columns; the rest are
    runtime extras the invariant monitors consume.
    """

    t: float
    j: float
    s: float
    sup_dtu: float
    theta_min: float
    theta_max: float
    lambda_min: float
    residual: float
    comparison_ok: bool
    l1_phase: float = math.nan
    u_max: float = math.nan
    min_u_minus_sub: float = math.nan
    dt: float = math.nan
    step_index: int = 0


@dataclass
class MonitorItem:
    name: str
    passed: bool
    detail: str


@dataclass
class MonitorReport:
    items: list[MonitorItem]
    slack: float

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items)

    def failures(self) -> list[MonitorItem]:
        return [it for it in self.items if not it.passed]

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "slack": self.slack,
            "items": [
                {"name": it.name, "passed": it.passed, "detail": it.detail}
                for it in self.items
            ],
        }


class FlowProblem:
    """Grid, data, and step policy for one Cauchy-Dirichlet run."""

    def __init__(self, grid: GridSpec, hat_theta: float, boundary,
                 guard: float = 1e-3, safety: float = 0.8):
        self.grid = grid
        self.hat_theta = hat_theta
        self.boundary = boundary
        self.guard = guard
        self.safety = safety
        self._bmask = boundary_mask(grid)
        self._static_boundary = None
        if not getattr(boundary, "time_dependent", False):
            self._static_boundary = boundary.sample(grid, 0.0).values[self._bmask]

    def boundary_values(self, t: float) -> np.ndarray:
        if self._static_boundary is not None:
            return self._static_boundary
        return self.boundary.sample(grid=self.grid, t=t).values[self._bmask]

    def apply_boundary(self, values: np.ndarray, t: float):
        values[self._bmask] = self.boundary_values(t)


def euler_step(problem: FlowProblem, state: FlowState, dt: float,
               phase: PhaseData | None = None):
    """One accepted explicit step; halves dt on phase-guard rejection.

    Returns (state, phase_of_new_state).  Raises StabilityCollapseError
    after 20 consecutive rejections.
    """
    grid = problem.grid
    if phase is None:
        phase = phase_data(complex_hessian(state.u))
    velocity = rhs(state.u, problem.hat_theta, phase=phase)
    guard = problem.guard
    for _ in range(_MAX_REJECTIONS + 1):
        new_vals = state.u.values.copy()
        new_vals[grid.interior_slice] += dt * velocity
        problem.apply_boundary(new_vals, state.t + dt)
        u_new = ScalarField(grid, new_vals)
        new_phase = phase_data(complex_hessian(u_new))
        th = new_phase.theta
        if np.all(th > guard) and np.all(th < np.pi - guard):
            return (
                FlowState(u_new, state.t + dt, dt, state.step_index + 1),
                new_phase,
            )
        dt *= 0.5
    raise StabilityCollapseError(
        f"step at t = {state.t:.6g} rejected {_MAX_REJECTIONS} times; "
        f"phase pinned against the guard band ({guard:.1e})"
    )


@dataclass
class FlowResult:
    state: FlowState
    rows: list[DiagnosticsRow]
    monitor: MonitorReport
    converged: bool
    grid: GridSpec = None
    phi: ScalarField = None


def _l1_phase(grid: GridSpec, theta: np.ndarray, hat_theta: float) -> float:
    return float(pairwise_sum(np.abs(theta - hat_theta).ravel())) * grid.cell_volume


def run_flow(config: ProblemConfig, collect_rows: bool = True) -> FlowResult:
    """Integrate the flow described by a problem configuration.

    Emits a diagnostics row at t = 0, then per the cadence (0 = every
    accepted step), and always at the final instant.  Stops when either
    sup |dt_u| < tol_stationary or t reaches t_end.  Skipping row
    collection (collect_rows=False) drops the per-row functional
    evaluations but keeps the monitors that need only the final state.
    """
    compat = check_compatibility(config)
    if not compat.passed:
        raise ConfigError("incompatible problem data:\n" + compat.summary())

    grid = config.build_grid()
    problem = FlowProblem(grid, config.hat_theta, config.boundary,
                          guard=config.guard, safety=config.safety)

    phi = config.initial.sample(grid, 0.0)
    u0_vals = phi.values.copy()
    problem.apply_boundary(u0_vals, 0.0)
    state = FlowState(ScalarField(grid, u0_vals), 0.0, 0.0, 0)

    hess_phi = complex_hessian(phi)
    usub = None
    if config.subsolution is not None:
        usub = config.subsolution.sample(grid, 0.0)

    cot_hat = cot(config.hat_theta)
    rows: list[DiagnosticsRow] = []
    hess_u = complex_hessian(state.u)
    phase = phase_data(hess_u)
    next_mark = config.cadence if config.cadence > 0.0 else 0.0
    converged = False

    while True:
        velocity = phase.cot_theta - cot_hat
        sup_dtu = float(np.max(np.abs(velocity)))
        stationary = sup_dtu < config.tol_stationary
        at_end = state.t >= config.t_end - _TIME_EPS
        terminate = stationary or at_end
        due = (
            state.step_index == 0
            or config.cadence == 0.0
            or terminate
            or state.t >= next_mark - _TIME_EPS
        )
        if due and collect_rows:
            comparison_ok = True
            min_gap = math.nan
            if usub is not None:
                gap = state.u.values - usub.values
                min_gap = float(np.min(gap))
                comparison_ok = bool(min_gap >= -config.monitor_slack_coeff * grid.h**2)
            j_val = functionals.j_functional(
                phi, state.u, config.hat_theta, s_samples=config.s_samples,
                hess_phi=hess_phi, hess_u=hess_u)
            s_val = functionals.dissipation(
                state.u, velocity, config.hat_theta, hess_u=hess_u)
            rows.append(DiagnosticsRow(
                t=state.t,
                j=j_val,
                s=s_val,
                sup_dtu=sup_dtu,
                theta_min=float(np.min(phase.theta)),
                theta_max=float(np.max(phase.theta)),
                lambda_min=float(np.min(phase.eigenvalues)),
                residual=sup_dtu,
                comparison_ok=comparison_ok,
                l1_phase=_l1_phase(grid, phase.theta, config.hat_theta),
                u_max=float(np.max(state.u.values)),
                min_u_minus_sub=min_gap,
                dt=state.dt_last,
                step_index=state.step_index,
            ))
            while config.cadence > 0.0 and state.t >= next_mark - _TIME_EPS:
                next_mark += config.cadence
        if terminate:
            converged = stationary
            break
        dt = stable_dt(phase, grid.h, safety=config.safety,
                       cap=config.cadence if config.cadence > 0.0 else None)
        dt = min(dt, config.t_end - state.t)
        state, phase = euler_step(problem, state, dt, phase=phase)
        hess_u = complex_hessian(state.u)

    monitor = monitor_invariants(config, grid, problem, rows, usub)
    return FlowResult(state=state, rows=rows, monitor=monitor,
                      converged=converged, grid=grid, phi=phi)


def _boundary_phase_range(config: ProblemConfig, grid: GridSpec,
                          t_final: float) -> tuple[float, float]:
    """Range of Theta(Hess psi(t)) over interior nodes and sampled times."""
    times = np.linspace(0.0, max(t_final, _TIME_EPS), 9)
    lo, hi = math.inf, -math.inf
    for t in times:
        psi_t = config.boundary.sample(grid, float(t))
        th = phase_data(complex_hessian(psi_t)).theta
        lo = min(lo, float(np.min(th)))
        hi = max(hi, float(np.max(th)))
        if not config.boundary.time_dependent:
            break
    return lo, hi


def monitor_invariants(config: ProblemConfig, grid: GridSpec,
                       problem: FlowProblem, rows: list[DiagnosticsRow],
                       usub: ScalarField | None) -> MonitorReport:
    """A-posteriori structural checks on the recorded run.

    Each continuum bound gets a discretization slack eta = C h^2; the
    checks warn rather than bound-prove, catching gross violations of
    the phase confinement, velocity bound, comparison envelope, lower
    eigenvalue barrier, and late-time residual decay.
    """
    eta = config.monitor_slack_coeff * grid.h * grid.h
    items: list[MonitorItem] = []
    if not rows:
        return MonitorReport(items=[MonitorItem(
            "no-op", True, "no diagnostics rows recorded")], slack=eta)
    t_final = rows[-1].t

    data_lo, data_hi = _boundary_phase_range(config, grid, t_final)
    data_lo = min(data_lo, rows[0].theta_min)
    data_hi = max(data_hi, rows[0].theta_max)
    th_lo = min(r.theta_min for r in rows)
    th_hi = max(r.theta_max for r in rows)
    ok = th_lo >= data_lo - eta and th_hi <= data_hi + eta
    items.append(MonitorItem(
        "phase-confinement",
        ok,
        f"observed Theta in [{th_lo:.6f}, {th_hi:.6f}], parabolic data range "
        f"[{data_lo:.6f}, {data_hi:.6f}], slack {eta:.2e}",
    ))

    sup_dt_psi = 0.0
    if config.boundary.time_dependent:
        bmask = problem._bmask
        for t in np.linspace(0.0, max(t_final, _TIME_EPS), 9):
            dpsi = config.boundary.dt_sample(grid, float(t)).values[bmask]
            sup_dt_psi = max(sup_dt_psi, float(np.max(np.abs(dpsi))))
    bound = max(rows[0].sup_dtu, sup_dt_psi) + eta
    worst = max(r.sup_dtu for r in rows)
    items.append(MonitorItem(
        "velocity-bound",
        worst <= bound,
        f"max sup|dt_u| = {worst:.6e} against initial/boundary bound {bound:.6e}",
    ))

    if usub is not None:
        min_gap = min(r.min_u_minus_sub for r in rows)
        sup_side = float(np.max(usub.values[problem._bmask]))
        max_u = max(r.u_max for r in rows)
        ok = min_gap >= -eta and max_u <= sup_side + eta
        items.append(MonitorItem(
            "comparison-envelope",
            ok,
            f"min(u - subsolution) = {min_gap:.6e}, max u = {max_u:.6e} vs "
            f"side sup {sup_side:.6e}, slack {eta:.2e}",
        ))
    else:
        items.append(MonitorItem(
            "comparison-envelope", True, "no subsolution supplied; skipped"))

    th_lo_all = min(r.theta_min for r in rows)
    th_hi_all = max(r.theta_max for r in rows)
    delta1 = min(th_lo_all, math.pi / 2.0 - th_hi_all)
    lam_floor = math.tan(delta1) - eta if delta1 > 0.0 else -math.inf
    lam_min = min(r.lambda_min for r in rows)
    items.append(MonitorItem(
        "eigenvalue-floor",
        lam_min >= lam_floor,
        f"min eigenvalue {lam_min:.6e} vs tan(delta1) - eta = {lam_floor:.6e} "
        f"(delta1 = {delta1:.6f})",
    ))

    t0 = rows[0].t
    quarter = [r for r in rows if r.t >= t0 + 0.75 * (t_final - t0)]
    if len(quarter) < 3:
        items.append(MonitorItem(
            "residual-decay", True,
            f"only {len(quarter)} rows in the final quarter; skipped"))
    else:
        rel = 1e-3
        bumps = sum(
            1 for a, b in zip(quarter, quarter[1:])
            if b.l1_phase > a.l1_phase * (1.0 + rel) + 1e-15
        )
        net_ok = quarter[-1].l1_phase <= quarter[0].l1_phase * (1.0 + 1e-9) + 1e-15
        items.append(MonitorItem(
            "residual-decay",
            bumps == 0 and net_ok,
            f"L1 phase residual {quarter[0].l1_phase:.6e} -> "
            f"{quarter[-1].l1_phase:.6e} over the final quarter "
            f"({bumps} non-monotone increments)",
        ))

    return MonitorReport(items=items, slack=eta)
