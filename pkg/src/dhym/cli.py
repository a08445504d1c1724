"""Command-line interface: run-flow, solve-elliptic, check-subsolution,
eval-functionals, verify.

Exit codes: 0 success; 2 configuration problems; 3 numeric/stability
failures; 4 invariant violations (monitor failures under --strict, or any
failed check in `verify`).  All floating-point output is printed with 17
significant digits so files are bit-reproducible.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import cone, elliptic, figures, fileio, flow, functionals, verify
from .config import ProblemConfig, parse_config
from .errors import ConfigError, DhymError, SnapshotFormatError
from .hessian import complex_hessian
from .spectral import phase_data

_EXIT_CONFIG = 2
_EXIT_NUMERIC = 3
_EXIT_INVARIANT = 4


def _load(args) -> ProblemConfig:
    cfg = parse_config(args.config)
    if args.strict:
        cfg.strict = True
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def _outdir(cfg: ProblemConfig) -> str:
    path = cfg.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _fmt(x: float) -> str:
    return fileio.format_float(x)


def cmd_run_flow(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    grid = cfg.build_grid()
    fileio.write_snapshot(cfg.initial.sample(grid, 0.0),
                          os.path.join(out, "initial_state.dhym"))
    result = flow.run_flow(cfg)
    fileio.write_diagnostics(result.rows, os.path.join(out, "diagnostics.csv"))
    fileio.write_snapshot(result.state.u, os.path.join(out, "final_state.dhym"))
    report = {
        "converged": result.converged,
        "steps": result.state.step_index,
        "t_final": result.state.t,
        "residual_final": result.rows[-1].residual if result.rows else None,
        "monitor": result.monitor.to_json_dict(),
    }
    with open(os.path.join(out, "monitor_report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    if result.rows:
        figures.flow_summary_figure(result.rows, cfg.hat_theta,
                                    os.path.join(out, "flow_summary.png"))
    final_theta = phase_data(complex_hessian(result.state.u)).theta
    figures.phase_histogram_figure(final_theta, cfg.hat_theta,
                                   os.path.join(out, "phase_histogram.png"))
    print(f"run-flow: {result.state.step_index} steps to t = {_fmt(result.state.t)}, "
          f"residual {_fmt(result.rows[-1].residual)}, "
          f"{'converged' if result.converged else 'reached t_end'}")
    for item in result.monitor.items:
        mark = "ok" if item.passed else "VIOLATED"
        print(f"  monitor {item.name}: {mark} ({item.detail})")
    print(f"outputs in {out}: diagnostics.csv, initial_state.dhym, "
          f"final_state.dhym, monitor_report.json, flow_summary.png, "
          f"phase_histogram.png")
    if cfg.strict and not result.monitor.passed:
        print("strict mode: invariant monitor failures", file=sys.stderr)
        return _EXIT_INVARIANT
    return 0


def cmd_solve_elliptic(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    grid = cfg.build_grid()
    initial = cfg.initial.sample(grid, 0.0)
    options = elliptic.NewtonOptions(guard=cfg.guard)
    state = elliptic.newton_solve(initial, cfg.hat_theta, options)
    fileio.write_snapshot(state.u, os.path.join(out, "solution.dhym"))
    trace_path = os.path.join(out, "newton_trace.csv")
    with open(trace_path, "w", newline="") as fh:
        fh.write("iteration,residual,damping\n")
        for i, r, d in state.trace:
            fh.write(f"{i},{_fmt(r)},{_fmt(d)}\n")
    figures.newton_trace_figure(state.trace, os.path.join(out, "newton_trace.png"))
    print(f"solve-elliptic: {'converged' if state.converged else 'NOT converged'} "
          f"in {state.iteration} iterations, residual {_fmt(state.residual_sup)}")
    print(f"outputs in {out}: solution.dhym, newton_trace.csv, newton_trace.png")
    if not state.converged:
        print("Newton did not reach tolerance", file=sys.stderr)
        return _EXIT_NUMERIC
    return 0


def cmd_check_subsolution(args) -> int:
    cfg = _load(args)
    if cfg.subsolution is None:
        raise ConfigError("subsolution: required for check-subsolution")
    out = _outdir(cfg)
    grid = cfg.build_grid()
    usub = cfg.subsolution.sample(grid, 0.0)
    husub = complex_hessian(usub)
    cone_rep = cone.elliptic_subsolution_check(husub, cfg.hat_theta)
    dt_usub = cfg.subsolution.dt_sample(grid, 0.0).interior()
    margin_rep = cone.parabolic_margin(husub, dt_usub, cfg.hat_theta)
    compat = cone.check_compatibility(cfg)
    report = {
        "elliptic_criterion_ok": cone_rep.ok,
        "worst_partial_sum": cone_rep.worst,
        "worst_node": list(cone_rep.worst_node) if cone_rep.worst_node else None,
        "hat_theta": cfg.hat_theta,
        "parabolic_margin": margin_rep.margin,
        "margin_vacuous": margin_rep.vacuous,
        "margin_note": margin_rep.note,
        "compatibility_passed": compat.passed,
        "compatibility": compat.summary(),
    }
    with open(os.path.join(out, "subsolution_report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    verdict = "is" if cone_rep.ok else "is NOT"
    print(f"check-subsolution: supplied field {verdict} a subsolution "
          f"(worst partial phase sum {_fmt(cone_rep.worst)} vs "
          f"hat_theta {_fmt(cfg.hat_theta)})")
    if margin_rep.vacuous:
        print(f"  parabolic margin: vacuous ({margin_rep.note})")
    else:
        print(f"  parabolic margin: {_fmt(margin_rep.margin)}")
    print("  compatibility: " + ("passed" if compat.passed else "FAILED"))
    print(f"outputs in {out}: subsolution_report.json")
    return 0


def cmd_eval_functionals(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    grid = cfg.build_grid()
    phi = cfg.initial.sample(grid, 0.0)
    if cfg.target is not None:
        psi, which = cfg.target.sample(grid, 0.0), "target"
    elif cfg.subsolution is not None:
        psi, which = cfg.subsolution.sample(grid, 0.0), "subsolution"
    else:
        psi, which = cfg.boundary.sample(grid, 0.0), "boundary at t = 0"
    cy = functionals.cy_functional(phi, psi, s_samples=cfg.s_samples)
    j = math.cos(cfg.hat_theta) * cy.imag - math.sin(cfg.hat_theta) * cy.real
    path_diff = functionals.path_independence_check(phi, psi,
                                                    s_samples=cfg.s_samples)
    report = {
        "pair": {"phi": "initial", "psi": which},
        "s_samples": cfg.s_samples,
        "cy": {"re": cy.real, "im": cy.imag},
        "j": j,
        "path_independence": path_diff,
        "path_independence_relative": path_diff / (1.0 + abs(cy)),
    }
    with open(os.path.join(out, "functionals_report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"eval-functionals (phi = initial, psi = {which}):")
    print(f"  CY = {_fmt(cy.real)} + {_fmt(cy.imag)} i")
    print(f"  J  = {_fmt(j)}")
    print(f"  path-independence difference = {_fmt(path_diff)} "
          f"(relative {_fmt(path_diff / (1.0 + abs(cy)))})")
    print(f"outputs in {out}: functionals_report.json")
    return 0


def cmd_verify(args) -> int:
    seed = args.seed
    if seed is None and args.config is not None:
        seed = parse_config(args.config).seed
    if seed is None:
        seed = 0
    results = verify.run_all(seed=seed)
    for res in results:
        print(res.line())
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        payload = [
            {"name": r.name, "passed": r.passed, "worst": r.worst,
             "tolerance": r.tolerance, "samples": r.samples}
            for r in results
        ]
        with open(os.path.join(args.out, "verify_report.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    if all(r.passed for r in results):
        print(f"verify: all {len(results)} checks passed (seed {seed})")
        return 0
    print("verify: checks FAILED", file=sys.stderr)
    return _EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhym",
        description="Flow and stationary solvers for the Lagrangian phase "
                    "equation cot Theta(Hess u) = cot hat_theta on box domains",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("run-flow", cmd_run_flow, True,
         "integrate the gradient flow and write diagnostics"),
        ("solve-elliptic", cmd_solve_elliptic, True,
         "damped Newton solve of the stationary equation"),
        ("check-subsolution", cmd_check_subsolution, True,
         "cone membership, margins, and compatibility of the supplied data"),
        ("eval-functionals", cmd_eval_functionals, True,
         "CY / J / path-independence numbers for the configured field pair"),
        ("verify", cmd_verify, False,
         "randomized structural checks of the matrix kernels"),
    ]
    for name, handler, needs_config, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=needs_config,
                       help="path to a JSON problem file")
        p.add_argument("--strict", action="store_true",
                       help="treat monitor violations as errors (exit 4)")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override for randomized checks")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, SnapshotFormatError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except DhymError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
