"""Problem configuration: JSON schema, field families, validation.

A problem file is a single JSON object:

    {
      "n": 2,
      "box": {"lo": [-1,-1,-1,-1], "hi": [1,1,1,1]},
      "points_per_axis": [17,17,17,17],
      "hat_theta": {"pi_fraction": [1,3]},        // or a plain radian value
      "theta0": 0.3,
      "t_end": 2.0,
      "tol_stationary": 1e-6,
      "s_samples": 33,
      "strict": false,
      "seed": 7,
      "initial":  {"family": "quadratic", "matrix": [[1.7320508075688772, 0],
                                                     [0, 1.7320508075688772]]},
      "boundary": {"family": "quadratic", ...},
      "subsolution": {...},                        // optional
      "target": {...},                             // optional, eval-functionals
      "output": {"directory": "out", "cadence": 0.0}
    }

Field families:
  quadratic   sum_{jk} A_{jk} z_j conj(z_k) + linear.(x1,y1,...) + constant,
              A Hermitian; complex entries are numbers or [re, im] pairs
  expression  arithmetic over x1..xn, y1..yn, t with sin/cos/tan/exp/log/
              sqrt/sinh/cosh/tanh/atan, constants pi and e
  sampled     snapshot file (static in time), path relative to the config

Angles accept either radians or {"pi_fraction": [p, q]} meaning pi*p/q.
"""

from __future__ import annotations

import ast
import json
import math
import os
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import fileio
from .errors import ConfigError, DhymError, GridError
from .grid import GridSpec, ScalarField, make_grid, sample_function

_DT_PROBE = 1e-6  # central-difference step for d/dt of expression boundaries

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "sinh": np.sinh, "cosh": np.cosh,
    "tanh": np.tanh, "atan": np.arctan, "arctan": np.arctan, "abs": np.abs,
}
_CONSTS = {"pi": math.pi, "e": math.e}


def _as_complex(entry, where: str) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if (isinstance(entry, (list, tuple)) and len(entry) == 2
            and all(isinstance(v, (int, float)) for v in entry)):
        return complex(entry[0], entry[1])
    raise ConfigError(f"{where}: expected a number or [re, im] pair, got {entry!r}")


def parse_angle(raw, where: str) -> float:
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, dict) and set(raw) == {"pi_fraction"}:
        frac = raw["pi_fraction"]
        if (not isinstance(frac, (list, tuple)) or len(frac) != 2
                or not all(isinstance(v, (int, float)) for v in frac) or frac[1] == 0):
            raise ConfigError(f"{where}: pi_fraction must be [numerator, denominator]")
        return math.pi * frac[0] / frac[1]
    raise ConfigError(f"{where}: expected radians or {{'pi_fraction': [p, q]}}")


class FieldSpec:
    """One potential given by a config entry; samples onto grids on demand."""

    family = "?"
    time_dependent = False

    def sample(self, grid: GridSpec, t: float = 0.0) -> ScalarField:
        raise NotImplementedError

    def dt_sample(self, grid: GridSpec, t: float = 0.0) -> ScalarField:
        if not self.time_dependent:
            return ScalarField(grid, np.zeros(grid.shape))
        lo = self.sample(grid, t - _DT_PROBE).values
        hi = self.sample(grid, t + _DT_PROBE).values
        return ScalarField(grid, (hi - lo) / (2.0 * _DT_PROBE))

    def to_json(self) -> dict:
        raise NotImplementedError


class QuadraticField(FieldSpec):
    family = "quadratic"

    def __init__(self, matrix: np.ndarray, linear: np.ndarray, constant: float,
                 raw: dict):
        self.matrix = matrix
        self.linear = linear
        self.constant = constant
        self._raw = raw

    def sample(self, grid, t=0.0):
        if grid.n != self.matrix.shape[0]:
            raise ConfigError(
                f"quadratic field has n={self.matrix.shape[0]}, grid has n={grid.n}"
            )
        meshes = grid.meshes()
        vals = np.full(grid.shape, self.constant, dtype=np.float64)
        for k in range(grid.dim):
            if self.linear[k] != 0.0:
                vals += self.linear[k] * meshes[k]
        z = [meshes[2 * j] + 1j * meshes[2 * j + 1] for j in range(grid.n)]
        for j in range(grid.n):
            ajj = self.matrix[j, j].real
            if ajj != 0.0:
                vals += ajj * (meshes[2 * j] ** 2 + meshes[2 * j + 1] ** 2)
            for k in range(j + 1, grid.n):
                ajk = self.matrix[j, k]
                if ajk != 0:
                    vals += 2.0 * np.real(ajk * z[j] * np.conj(z[k]))
        return ScalarField(grid, vals)

    def to_json(self):
        return dict(self._raw)


class ExpressionField(FieldSpec):
    family = "expression"

    _ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name,
                ast.Call, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow,
                ast.USub, ast.UAdd, ast.Load)

    def __init__(self, expression: str, n: int, where: str):
        self.expression = expression
        self._names = [f"x{j+1}" for j in range(n)] + [f"y{j+1}" for j in range(n)]
        try:
            tree = ast.parse(expression, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"{where}: cannot parse expression: {exc}") from None
        for node in ast.walk(tree):
            if not isinstance(node, self._ALLOWED):
                raise ConfigError(
                    f"{where}: unsupported syntax element {type(node).__name__!r}"
                )
            if isinstance(node, ast.Call):
                if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                    raise ConfigError(f"{where}: only {sorted(_FUNCS)} may be called")
                if node.keywords:
                    raise ConfigError(f"{where}: keyword arguments are not allowed")
            if isinstance(node, ast.Name):
                ok = (node.id in _FUNCS or node.id in _CONSTS or node.id == "t"
                      or node.id in self._names)
                if not ok:
                    raise ConfigError(f"{where}: unknown name {node.id!r}")
        self._tree = tree
        self.time_dependent = any(
            isinstance(node, ast.Name) and node.id == "t" for node in ast.walk(tree)
        )

    def _eval(self, node, env):
        if isinstance(node, ast.Expression):
            return self._eval(node.body, env)
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            return _CONSTS[node.id]
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else +v
        if isinstance(node, ast.BinOp):
            a = self._eval(node.left, env)
            b = self._eval(node.right, env)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                return a / b
            return a ** b
        if isinstance(node, ast.Call):
            args = [self._eval(arg, env) for arg in node.args]
            return _FUNCS[node.func.id](*args)
        raise ConfigError(f"unsupported syntax element {type(node).__name__!r}")

    def sample(self, grid, t=0.0):
        meshes = grid.meshes()
        env = {}
        for j in range(grid.n):
            env[f"x{j+1}"] = meshes[2 * j]
            env[f"y{j+1}"] = meshes[2 * j + 1]
        env["t"] = float(t)
        vals = np.broadcast_to(np.asarray(self._eval(self._tree, env), float),
                               grid.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise ConfigError(f"expression {self.expression!r} produced non-finite values")
        return ScalarField(grid, vals)

    def to_json(self):
        return {"family": "expression", "expression": self.expression}


class SampledField(FieldSpec):
    family = "sampled"

    def __init__(self, path: str, resolved: str):
        self.path = path
        self._resolved = resolved
        self._cache = None

    def sample(self, grid, t=0.0):
        if self._cache is None or self._cache.grid is not grid:
            self._cache = fileio.attach_snapshot(grid, self._resolved)
        return self._cache

    def to_json(self):
        return {"family": "sampled", "path": self.path}


def _parse_field(raw, where: str, n: int, base_dir: str) -> FieldSpec:
    if not isinstance(raw, dict) or "family" not in raw:
        raise ConfigError(f"{where}: expected an object with a 'family' key")
    family = raw["family"]
    if family == "quadratic":
        mat_raw = raw.get("matrix")
        if mat_raw is None:
            raise ConfigError(f"{where}.matrix: required for the quadratic family")
        if len(mat_raw) != n or any(len(r) != n for r in mat_raw):
            raise ConfigError(f"{where}.matrix: expected an {n}x{n} matrix")
        A = np.empty((n, n), dtype=np.complex128)
        for j in range(n):
            for k in range(n):
                A[j, k] = _as_complex(mat_raw[j][k], f"{where}.matrix[{j}][{k}]")
        scale = 1.0 + np.max(np.abs(A))
        if np.max(np.abs(A - A.conj().T)) > 1e-12 * scale:
            raise ConfigError(f"{where}.matrix: coefficient matrix is not Hermitian")
        lin_raw = raw.get("linear", [0.0] * (2 * n))
        if len(lin_raw) != 2 * n:
            raise ConfigError(f"{where}.linear: expected 2n = {2*n} entries")
        linear = np.asarray([float(v) for v in lin_raw])
        constant = float(raw.get("constant", 0.0))
        return QuadraticField(A, linear, constant, raw)
    if family == "expression":
        expr = raw.get("expression")
        if not isinstance(expr, str):
            raise ConfigError(f"{where}.expression: required string")
        return ExpressionField(expr, n, f"{where}.expression")
    if family == "sampled":
        path = raw.get("path")
        if not isinstance(path, str):
            raise ConfigError(f"{where}.path: required string")
        resolved = path if os.path.isabs(path) else os.path.join(base_dir, path)
        return SampledField(path, resolved)
    raise ConfigError(f"{where}.family: unknown family {family!r}")


@dataclass
class ProblemConfig:
    n: int
    lo: tuple
    hi: tuple
    points: tuple
    hat_theta: float
    hat_theta_raw: object
    theta0: float
    t_end: float
    initial: FieldSpec
    boundary: FieldSpec
    subsolution: Optional[FieldSpec] = None
    target: Optional[FieldSpec] = None
    tol_stationary: float = 1e-6
    s_samples: int = 33
    strict: bool = False
    seed: int = 0
    output_dir: str = "."
    cadence: float = 0.0
    monitor_slack_coeff: float = 10.0
    guard: float = 1e-3
    safety: float = 0.8

    def build_grid(self) -> GridSpec:
        try:
            return make_grid(self.n, self.lo, self.hi, self.points)
        except GridError as exc:
            raise ConfigError(f"box/points_per_axis: {exc}") from None

    def to_json_dict(self) -> dict:
        out = {
            "n": self.n,
            "box": {"lo": list(self.lo), "hi": list(self.hi)},
            "points_per_axis": list(self.points),
            "hat_theta": self.hat_theta_raw,
            "theta0": self.theta0,
            "t_end": self.t_end,
            "tol_stationary": self.tol_stationary,
            "s_samples": self.s_samples,
            "strict": self.strict,
            "seed": self.seed,
            "initial": self.initial.to_json(),
            "boundary": self.boundary.to_json(),
            "output": {"directory": self.output_dir, "cadence": self.cadence},
            "monitor_slack_coeff": self.monitor_slack_coeff,
            "guard": self.guard,
            "safety": self.safety,
        }
        if self.subsolution is not None:
            out["subsolution"] = self.subsolution.to_json()
        if self.target is not None:
            out["target"] = self.target.to_json()
        return out


def config_from_dict(data: dict, base_dir: str = ".") -> ProblemConfig:
    def need(key):
        if key not in data:
            raise ConfigError(f"{key}: required field is missing")
        return data[key]

    n = need("n")
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n: expected a positive integer, got {n!r}")
    box = need("box")
    if not isinstance(box, dict) or "lo" not in box or "hi" not in box:
        raise ConfigError("box: expected an object with 'lo' and 'hi'")
    points = need("points_per_axis")
    hat_raw = need("hat_theta")
    hat_theta = parse_angle(hat_raw, "hat_theta")
    if not 0.0 < hat_theta < math.pi / 2:
        raise ConfigError(
            f"hat_theta: hypercritical range violated (need 0 < hat_theta < pi/2, "
            f"got {hat_theta!r})"
        )
    theta0 = parse_angle(need("theta0"), "theta0")
    if not 0.0 < theta0 < math.pi / 4:
        raise ConfigError(f"theta0: need 0 < theta0 < pi/4, got {theta0!r}")
    t_end = float(need("t_end"))
    if not t_end > 0.0:
        raise ConfigError(f"t_end: must be positive, got {t_end!r}")
    tol_stationary = float(data.get("tol_stationary", 1e-6))
    if tol_stationary < 0.0:
        raise ConfigError("tol_stationary: must be >= 0")
    s_samples = data.get("s_samples", 33)
    if not isinstance(s_samples, int) or s_samples < 3 or s_samples % 2 == 0:
        raise ConfigError(f"s_samples: need an odd integer >= 3, got {s_samples!r}")
    strict = bool(data.get("strict", False))
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed > 2**64 - 1:
        raise ConfigError(f"seed: need an unsigned 64-bit integer, got {seed!r}")
    output = data.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output: expected an object")
    output_dir = output.get("directory", ".")
    cadence = float(output.get("cadence", 0.0))
    if cadence < 0.0:
        raise ConfigError("output.cadence: must be >= 0")
    monitor_slack_coeff = float(data.get("monitor_slack_coeff", 10.0))
    if monitor_slack_coeff <= 0.0:
        raise ConfigError("monitor_slack_coeff: must be positive")
    guard = float(data.get("guard", 1e-3))
    if not 0.0 < guard < 0.5:
        raise ConfigError("guard: need 0 < guard < 0.5")
    safety = float(data.get("safety", 0.8))
    if not 0.0 < safety <= 1.0:
        raise ConfigError("safety: need 0 < safety <= 1")

    cfg = ProblemConfig(
        n=n,
        lo=tuple(float(v) for v in box["lo"]),
        hi=tuple(float(v) for v in box["hi"]),
        points=tuple(int(p) for p in points),
        hat_theta=hat_theta,
        hat_theta_raw=hat_raw,
        theta0=theta0,
        t_end=t_end,
        initial=_parse_field(need("initial"), "initial", n, base_dir),
        boundary=_parse_field(need("boundary"), "boundary", n, base_dir),
        subsolution=(
            _parse_field(data["subsolution"], "subsolution", n, base_dir)
            if "subsolution" in data else None
        ),
        target=(
            _parse_field(data["target"], "target", n, base_dir)
            if "target" in data else None
        ),
        tol_stationary=tol_stationary,
        s_samples=s_samples,
        strict=strict,
        seed=seed,
        output_dir=output_dir,
        cadence=cadence,
        monitor_slack_coeff=monitor_slack_coeff,
        guard=guard,
        safety=safety,
    )
    cfg.build_grid()  # surface geometry problems at parse time
    return cfg


def parse_config(path) -> ProblemConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return config_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
