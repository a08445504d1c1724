"""Discrete complex Hessians from second-order central differences.

With z_j = x_j + i y_j the complex Hessian of a real potential u is

    u_{j k-bar} = 1/4 [ (d_{x_j x_k} + d_{y_j y_k}) u
                        + i (d_{x_j y_k} - d_{y_j x_k}) u ].

Each real second derivative is replaced by the standard central stencil
(pure: (f_+ - 2 f_0 + f_-)/h^2, mixed: 4-point cross / (4 h^2)), which is
exact on quadratics and O(h^2) otherwise.  Because the discrete mixed
stencils commute exactly, the assembled matrix field is Hermitian to the
last bit; we build the lower triangle from the conjugate upper triangle
rather than recomputing it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError
from .grid import GridSpec, ScalarField


@dataclass
class HermitianField:
    """Complex Hessian values at interior nodes, shape (*interior, n, n)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        want = self.grid.interior_shape + (self.grid.n, self.grid.n)
        if self.values.shape != want:
            raise GridError(
                f"hermitian field shape {self.values.shape}, expected {want}"
            )

    def flat(self) -> np.ndarray:
        n = self.grid.n
        return self.values.reshape(-1, n, n)


def _interior_view(values: np.ndarray, offsets: dict) -> np.ndarray:
    # View of the interior block shifted by offsets[axis] in {-1, 0, +1}.
    slices = []
    for axis in range(values.ndim):
        d = offsets.get(axis, 0)
        slices.append(slice(1 + d, values.shape[axis] - 1 + d))
    return values[tuple(slices)]


def _pure_second(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    up = _interior_view(values, {axis: +1})
    mid = _interior_view(values, {})
    dn = _interior_view(values, {axis: -1})
    return (up - 2.0 * mid + dn) / (h * h)


def _cross_second(values: np.ndarray, axis_a: int, axis_b: int, h: float) -> np.ndarray:
    pp = _interior_view(values, {axis_a: +1, axis_b: +1})
    pm = _interior_view(values, {axis_a: +1, axis_b: -1})
    mp = _interior_view(values, {axis_a: -1, axis_b: +1})
    mm = _interior_view(values, {axis_a: -1, axis_b: -1})
    return (pp - pm - mp + mm) / (4.0 * h * h)


def fd_second(field: ScalarField, axis_a: int, axis_b: int, node: tuple) -> float:
    """Central second difference d^2 u / d axis_a d axis_b at one node.

    ``node`` is a full-grid multi-index and must be interior (the stencil
    reaches one ring around it).
    """
    grid = field.grid
    if not (0 <= axis_a < grid.dim and 0 <= axis_b < grid.dim):
        raise GridError(f"axis pair ({axis_a}, {axis_b}) out of range for dim {grid.dim}")
    node = tuple(int(i) for i in node)
    if len(node) != grid.dim:
        raise GridError(f"node index length {len(node)} != grid dim {grid.dim}")
    for k, idx in enumerate(node):
        if not (1 <= idx <= grid.points[k] - 2):
            raise GridError(f"node {node} is not interior on axis {k}")
    v = field.values
    h2 = grid.h * grid.h
    if axis_a == axis_b:
        up = list(node)
        dn = list(node)
        up[axis_a] += 1
        dn[axis_a] -= 1
        return float((v[tuple(up)] - 2.0 * v[node] + v[tuple(dn)]) / h2)
    out = 0.0
    for sa, sb, sign in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
        idx = list(node)
        idx[axis_a] += sa
        idx[axis_b] += sb
        out += sign * v[tuple(idx)]
    return float(out / (4.0 * h2))


def complex_hessian(field: ScalarField) -> HermitianField:
    """Complex Hessian u_{j k-bar} at every interior node."""
    grid = field.grid
    n = grid.n
    v = field.values
    h = grid.h
    U = np.empty(grid.interior_shape + (n, n), dtype=np.complex128)
    for j in range(n):
        xj, yj = 2 * j, 2 * j + 1
        for k in range(j, n):
            xk, yk = 2 * k, 2 * k + 1
            if j == k:
                re = 0.25 * (_pure_second(v, xj, h) + _pure_second(v, yj, h))
                U[..., j, j] = re
            else:
                re = 0.25 * (_cross_second(v, xj, xk, h) + _cross_second(v, yj, yk, h))
                im = 0.25 * (_cross_second(v, xj, yk, h) - _cross_second(v, yj, xk, h))
                U[..., j, k] = re + 1j * im
                U[..., k, j] = re - 1j * im
    return HermitianField(grid, U)
