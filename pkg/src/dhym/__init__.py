"""Solvers and verification tools for the Lagrangian phase equation

    cot Theta(Hess_C u) = cot hat_theta,     Theta(lambda) = sum_i arccot lambda_i,

on box domains in C^n: an explicit gradient flow of the J-functional, a
damped Newton solver for the stationary problem, cone/subsolution
certificates, and randomized structural checks of the matrix kernels.
"""

import os as _os

# DHYM_THREADS caps the worker count of the numeric backends.  It must be
# mapped onto their environment knobs before numpy loads; results never
# depend on it (all reductions use a fixed pairwise order).
_threads = _os.environ.get("DHYM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from .errors import (
    ConfigError,
    DhymError,
    GridError,
    LinearSolveError,
    NewtonStallError,
    NonHermitianError,
    PhaseBranchError,
    SnapshotFormatError,
    StabilityCollapseError,
)
from .grid import (
    GridSpec,
    NodeClass,
    ScalarField,
    boundary_mask,
    classify_nodes,
    integrate_interior,
    make_grid,
    pairwise_sum,
    sample_function,
)
from .hessian import HermitianField, complex_hessian, fd_second
from .spectral import (
    PhaseData,
    arccot,
    cot,
    cot_theta_det,
    det_plus_i,
    hermitian_eigenvalues,
    lagrangian_phase,
    linearization,
    phase_data,
)
from .cone import (
    CompatibilityReport,
    ConeReport,
    MarginReport,
    check_compatibility,
    elliptic_subsolution_check,
    in_gamma,
    parabolic_margin,
)
from .functionals import (
    DensityField,
    FunctionalReport,
    cy_functional,
    density,
    dissipation,
    gradient_flow_check,
    j_functional,
    path_independence_check,
    variation_check,
    volume_normalization,
)
from .flow import (
    DiagnosticsRow,
    FlowProblem,
    FlowResult,
    FlowState,
    MonitorReport,
    euler_step,
    monitor_invariants,
    rhs,
    run_flow,
    stable_dt,
)
from .elliptic import (
    NewtonOptions,
    NewtonState,
    linear_solve,
    newton_solve,
    residual,
)
from .config import FieldSpec, ProblemConfig, config_from_dict, parse_config
from .fileio import read_snapshot, write_diagnostics, write_snapshot

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DhymError", "GridError", "LinearSolveError",
    "NewtonStallError", "NonHermitianError", "PhaseBranchError",
    "SnapshotFormatError", "StabilityCollapseError",
    "GridSpec", "NodeClass", "ScalarField", "boundary_mask", "classify_nodes",
    "integrate_interior", "make_grid", "pairwise_sum", "sample_function",
    "HermitianField", "complex_hessian", "fd_second",
    "PhaseData", "arccot", "cot", "cot_theta_det", "det_plus_i",
    "hermitian_eigenvalues", "lagrangian_phase", "linearization", "phase_data",
    "CompatibilityReport", "ConeReport", "MarginReport", "check_compatibility",
    "elliptic_subsolution_check", "in_gamma", "parabolic_margin",
    "DensityField", "FunctionalReport", "cy_functional", "density",
    "dissipation", "gradient_flow_check", "j_functional",
    "path_independence_check", "variation_check", "volume_normalization",
    "DiagnosticsRow", "FlowProblem", "FlowResult", "FlowState", "MonitorReport",
    "euler_step", "monitor_invariants", "rhs", "run_flow", "stable_dt",
    "NewtonOptions", "NewtonState", "linear_solve", "newton_solve", "residual",
    "FieldSpec", "ProblemConfig", "config_from_dict", "parse_config",
    "read_snapshot", "write_diagnostics", "write_snapshot",
    "__version__",
]
