"""Uniform box grids in R^{2n} identified with C^n, and deterministic quadrature.

A point of C^n is stored through its real coordinates ordered

    x_1, y_1, x_2, y_2, ..., x_n, y_n,      z_j = x_j + i y_j,

so a grid on a box [lo, hi] in R^{2n} is a 2n-dimensional array indexed
row-major in that axis order.  The spacing h must be the same on every
axis (isotropic); all second-difference stencils rely on that.

Quadrature over interior nodes uses the midpoint-style weight h^{2n} per
node and a fixed binary-tree summation order, which makes integrals
bit-reproducible regardless of threading or chunking.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Sequence

import numpy as np

from .errors import GridError

_ISO_RTOL = 1e-12  # relative spread allowed between per-axis spacings


class NodeClass(IntEnum):
    INTERIOR = 0
    BOUNDARY_LAYER = 1
    # Reserved for nodes whose stencil would leave the grid.  On a box with
    # a single boundary ring every non-boundary node has its full one-ring
    # neighbourhood, so the box classifier never emits this tag.
    GHOST_EXCLUDED = 2


@dataclass(frozen=True)
class GridSpec:
    """Isotropic tensor grid on an axis-aligned box in R^{2n}.

    Attributes
    ----------
    n:      complex dimension (the grid lives in R^{2n})
    lo, hi: box corners, length 2n
    points: nodes per axis, length 2n, each >= 5
    h:      common spacing (hi_k - lo_k) / (points_k - 1)
    """

    n: int
    lo: tuple
    hi: tuple
    points: tuple
    h: float

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def interior_shape(self) -> tuple:
        return tuple(p - 2 for p in self.points)

    @property
    def interior_slice(self) -> tuple:
        return tuple(slice(1, -1) for _ in range(self.dim))

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.points))

    @property
    def num_interior(self) -> int:
        return int(np.prod(self.interior_shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis_coords(self, k: int) -> np.ndarray:
        return self.lo[k] + self.h * np.arange(self.points[k])

    def meshes(self) -> list:
        """Coordinate arrays of full grid shape, one per real axis."""
        axes = [self.axis_coords(k) for k in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij"))


@dataclass
class ScalarField:
    """Real node values on a grid, stored in the grid's row-major layout."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def interior(self) -> np.ndarray:
        return self.values[self.grid.interior_slice]

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def make_grid(n: int, lo: Sequence[float], hi: Sequence[float],
              points: Sequence[int]) -> GridSpec:
    """Validate box data and return the grid description.

    Raises GridError for dimension mismatches, fewer than 5 points on an
    axis, a degenerate box, or anisotropic spacing.
    """
    if n < 1:
        raise GridError(f"complex dimension must be >= 1, got {n}")
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    points = tuple(int(p) for p in points)
    if len(lo) != 2 * n or len(hi) != 2 * n or len(points) != 2 * n:
        raise GridError(
            f"expected 2n = {2*n} entries for lo/hi/points, got "
            f"{len(lo)}/{len(hi)}/{len(points)}"
        )
    for k, p in enumerate(points):
        if p < 5:
            raise GridError(f"axis {k}: need at least 5 points, got {p}")
    spacings = []
    for k in range(2 * n):
        if not hi[k] > lo[k]:
            raise GridError(f"axis {k}: degenerate box, hi must exceed lo")
        spacings.append((hi[k] - lo[k]) / (points[k] - 1))
    h = spacings[0]
    for k, hk in enumerate(spacings):
        if abs(hk - h) > _ISO_RTOL * max(abs(h), abs(hk)):
            raise GridError(
                f"axis {k}: spacing {hk!r} differs from axis 0 spacing {h!r}; "
                "the grid must be isotropic"
            )
    return GridSpec(n=n, lo=lo, hi=hi, points=points, h=h)


def classify_nodes(grid: GridSpec) -> np.ndarray:
    """Per-node classification; outermost ring is the boundary layer."""
    labels = np.full(grid.shape, NodeClass.BOUNDARY_LAYER, dtype=np.int8)
    labels[grid.interior_slice] = NodeClass.INTERIOR
    return labels


def boundary_mask(grid: GridSpec) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    mask[grid.interior_slice] = False
    return mask


def sample_function(grid: GridSpec, f: Callable) -> ScalarField:
    """Evaluate ``f`` on every node.

    ``f`` receives the 2n coordinate arrays (x1, y1, ..., xn, yn) of full
    grid shape and must return values broadcastable to that shape.  A
    non-finite sample raises GridError.
    """
    vals = np.asarray(f(*grid.meshes()), dtype=np.float64)
    vals = np.broadcast_to(vals, grid.shape).copy()
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise GridError(f"non-finite sample at node {tuple(int(i) for i in bad)}")
    return ScalarField(grid, vals)


def pairwise_sum(values: np.ndarray):
    """Sum in a fixed binary-tree order.

    Adjacent pairs are folded until one value remains; an odd tail element
    is carried to the end of the next level.  The order never depends on
    threading, so results are bit-stable run to run.
    """
    a = np.asarray(values).ravel()
    if a.size == 0:
        return a.dtype.type(0) if a.dtype.kind in "fc" else 0.0
    while a.size > 1:
        m = a.size // 2
        folded = a[0 : 2 * m : 2] + a[1 : 2 * m : 2]
        if a.size % 2:
            folded = np.concatenate([folded, a[-1:]])
        a = folded
    return a[0].item()


def integrate_interior(field: ScalarField, weight: ScalarField | None = None) -> float:
    """Interior quadrature  sum_interior field * weight * h^{2n}.

    The reduction order is the fixed pairwise fold of ``pairwise_sum`` over
    row-major interior nodes.
    """
    vals = field.interior()
    if weight is not None:
        if weight.grid is not field.grid and weight.grid != field.grid:
            raise GridError("weight field lives on a different grid")
        vals = vals * weight.interior()
    return pairwise_sum(vals) * field.grid.cell_volume


def integrate_interior_values(grid: GridSpec, interior_values: np.ndarray):
    """Same quadrature for raw interior-shaped arrays (real or complex)."""
    if interior_values.shape != grid.interior_shape:
        raise GridError(
            f"interior array shape {interior_values.shape} does not match "
            f"{grid.interior_shape}"
        )
    return pairwise_sum(interior_values) * grid.cell_volume
