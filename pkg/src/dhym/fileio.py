"""Binary field snapshots and delimited diagnostics output.

Snapshot layout (little-endian throughout):

    offset 0   magic  b"DHYM"
    offset 4   u32    format version (currently 1)
    offset 8   u32    complex dimension n
    offset 12  u32*2n nodes per axis
    then       f64    node values, row-major in the grid's axis order

Diagnostics are CSV with a fixed header; floats carry 17 significant
digits so parsing them back reproduces the doubles bit for bit.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import SnapshotFormatError
from .grid import GridSpec, ScalarField

SNAPSHOT_MAGIC = b"DHYM"
SNAPSHOT_VERSION = 1

DIAGNOSTICS_HEADER = (
    "t,J,S,sup_dtu,theta_min,theta_max,lambda_min,residual,comparison_ok"
)


def write_snapshot(field: ScalarField, path) -> None:
    grid = field.grid
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION, grid.n))
        fh.write(struct.pack(f"<{grid.dim}I", *grid.points))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_snapshot(path):
    """Read a snapshot; returns (n, points, values array).

    The caller supplies the box geometry (snapshots store only the lattice
    shape), typically from a problem configuration.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(
            f"{path}: wrong magic at offset 0 (got {blob[:4]!r}, want {SNAPSHOT_MAGIC!r})"
        )
    if len(blob) < 12:
        raise SnapshotFormatError(f"{path}: truncated header")
    version, n = struct.unpack_from("<II", blob, 4)
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(
            f"{path}: unsupported snapshot version {version} (expected {SNAPSHOT_VERSION})"
        )
    if n < 1:
        raise SnapshotFormatError(f"{path}: invalid dimension n = {n}")
    size_end = 12 + 4 * 2 * n
    if len(blob) < size_end:
        raise SnapshotFormatError(f"{path}: truncated axis-size table")
    points = struct.unpack_from(f"<{2*n}I", blob, 12)
    count = int(np.prod(points))
    want = size_end + 8 * count
    if len(blob) != want:
        raise SnapshotFormatError(
            f"{path}: size mismatch, expected {want} bytes for shape {points}, "
            f"got {len(blob)}"
        )
    values = np.frombuffer(blob, dtype="<f8", offset=size_end).reshape(points)
    return n, points, values.astype(np.float64)


def attach_snapshot(grid: GridSpec, path) -> ScalarField:
    """Read a snapshot and bind it to a grid, checking the lattice shape."""
    n, points, values = read_snapshot(path)
    if n != grid.n or tuple(points) != grid.shape:
        raise SnapshotFormatError(
            f"{path}: snapshot lattice n={n} shape={points} does not match "
            f"grid n={grid.n} shape={grid.shape}"
        )
    return ScalarField(grid, values)


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def write_diagnostics(rows, path) -> None:
    """Write diagnostics rows as CSV with the fixed canonical header."""
    lines = [DIAGNOSTICS_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    format_float(row.t),
                    format_float(row.j),
                    format_float(row.s),
                    format_float(row.sup_dtu),
                    format_float(row.theta_min),
                    format_float(row.theta_max),
                    format_float(row.lambda_min),
                    format_float(row.residual),
                    str(int(row.comparison_ok)),
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
