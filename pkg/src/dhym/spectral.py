"""Spectral calculus of the Lagrangian phase operator.

For Hermitian U with eigenvalues lam_1 >= ... >= lam_n the phase is

    Theta(U) = sum_i arccot(lam_i),        arccot t = pi/2 - arctan t,

each summand in (0, pi).  On the principal branch the phase can also be
read off a single determinant,

    det(U + i I) = prod_i (lam_i + i)  =>  cot Theta = Re det / Im det,

which gives an eigenvalue-free cross-check route.  The derivative of
cot Theta with respect to the Hermitian entries is

    F = Q diag( (1 + cot^2 Theta) / (1 + lam_j^2) ) Q*,

positive definite whenever Theta is defined; F depends on U only through
its spectral projectors, so for n = 2 it is assembled directly from U
without an explicit eigenbasis.

Eigenvalues: n = 1 is trivial, n = 2 uses the closed form from trace and
determinant, n >= 3 runs cyclic Jacobi sweeps (unitary 2x2 rotations) to
off-diagonal Frobenius norm <= 1e-12 * ||U||.  The same sweep accumulates
the eigenbasis when one is required.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianError, PhaseBranchError
from .grid import GridSpec
from .hessian import HermitianField

_HERM_TOL = 1e-10
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 60
_BRANCH_TOL = 1e-14


def arccot(x):
    """Principal arccotangent with range (0, pi)."""
    return np.pi / 2 - np.arctan(x)


def cot(x):
    return np.cos(x) / np.sin(x)


def lagrangian_phase(lam):
    """Theta(lam) = sum_i arccot(lam_i), summed over the last axis."""
    return np.sum(arccot(np.asarray(lam, dtype=np.float64)), axis=-1)


def _check_hermitian(U: np.ndarray) -> np.ndarray:
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim < 2 or U.shape[-1] != U.shape[-2]:
        raise NonHermitianError(f"expected square matrices, got shape {U.shape}")
    scale = 1.0 + np.max(np.abs(U))
    defect = np.max(np.abs(U - np.conj(np.swapaxes(U, -1, -2))))
    if defect > _HERM_TOL * scale:
        raise NonHermitianError(
            f"matrix is not Hermitian: max |U - U*| = {defect:.3e} "
            f"exceeds {_HERM_TOL:.0e} * (1 + max|U|)"
        )
    return U


def _eigvals_2x2(batch: np.ndarray) -> np.ndarray:
    # Closed form from trace and determinant; the discriminant
    # (tr/2)^2 - det is evaluated as ((a-d)/2)^2 + |b|^2, which is the
    # same number without cancellation.
    a = batch[..., 0, 0].real
    d = batch[..., 1, 1].real
    b = batch[..., 0, 1]
    half_tr = 0.5 * (a + d)
    root = np.hypot(0.5 * (a - d), np.abs(b))
    return np.stack([half_tr + root, half_tr - root], axis=-1)


def _jacobi_eigh(batch: np.ndarray, need_vectors: bool = True):
    """Cyclic Jacobi diagonalization of a stack of Hermitian matrices.

    Returns eigenvalues in descending order and, when requested, the
    accumulated unitary whose columns are the matching eigenvectors.
    """
    A = np.array(batch, dtype=np.complex128)
    lead = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape(-1, n, n)
    N = A.shape[0]
    Q = np.tile(np.eye(n, dtype=np.complex128), (N, 1, 1)) if need_vectors else None
    norm = np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2)))
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(A[:, off_mask]) ** 2, axis=1))
        if np.all(off <= _JACOBI_TOL * norm):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                mag = np.abs(apq)
                active = mag > 1e-300
                app = A[:, p, p].real
                aqq = A[:, q, q].real
                dpq = 0.5 * (app - aqq)
                r = np.hypot(dpq, mag)
                # t = lam_max - app, computed without cancellation
                denom = np.where(r + dpq > 0.0, r + dpq, 1.0)
                t = np.where(dpq >= 0.0, mag * mag / denom, r - dpq)
                nrm = np.sqrt(mag * mag + t * t)
                safe = np.where(active, nrm, 1.0)
                c = np.where(active, apq / safe, 1.0 + 0.0j)
                s = np.where(active, t / safe, 0.0)
                cc = np.conj(c)
                rp = A[:, p, :].copy()
                rq = A[:, q, :].copy()
                A[:, p, :] = cc[:, None] * rp + s[:, None] * rq
                A[:, q, :] = -s[:, None] * rp + c[:, None] * rq
                cp = A[:, :, p].copy()
                cq = A[:, :, q].copy()
                A[:, :, p] = cp * c[:, None] + cq * s[:, None]
                A[:, :, q] = -cp * s[:, None] + cq * cc[:, None]
                if need_vectors:
                    qp = Q[:, :, p].copy()
                    qq = Q[:, :, q].copy()
                    Q[:, :, p] = qp * c[:, None] + qq * s[:, None]
                    Q[:, :, q] = -qp * s[:, None] + qq * cc[:, None]

    lam = np.real(np.einsum("...ii->...i", A))
    order = np.argsort(-lam, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    if need_vectors:
        Q = np.take_along_axis(Q, order[:, None, :], axis=2)
        return lam.reshape(lead + (n,)), Q.reshape(lead + (n, n))
    return lam.reshape(lead + (n,)), None


def _eigvals_batch(batch: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return batch[..., 0, 0].real[..., None].copy()
    if n == 2:
        return _eigvals_2x2(batch)
    lam, _ = _jacobi_eigh(batch, need_vectors=False)
    return lam


def hermitian_eigenvalues(U: np.ndarray) -> np.ndarray:
    """Eigenvalues, descending; accepts one matrix or a stack of them."""
    U = _check_hermitian(U)
    n = U.shape[-1]
    if U.ndim == 2:
        if n == 1:
            return np.array([U[0, 0].real])
        if n == 2:
            return _eigvals_2x2(U)
        lam, _ = _jacobi_eigh(U[None], need_vectors=False)
        return lam[0]
    return _eigvals_batch(U, n)


def det_plus_i(batch: np.ndarray, n: int) -> np.ndarray:
    """det(U + i I), vectorized over leading axes.

    n <= 2 uses the expanded cofactor form; larger n goes through LU with
    partial pivoting (numpy.linalg.det on the complex-shifted matrix).
    """
    if n == 1:
        return batch[..., 0, 0] + 1j
    if n == 2:
        a = batch[..., 0, 0]
        d = batch[..., 1, 1]
        b = batch[..., 0, 1]
        return (a + 1j) * (d + 1j) - b * np.conj(b)
    shifted = batch + 1j * np.eye(n)
    return np.linalg.det(shifted)


def cot_theta_det(U: np.ndarray):
    """cot Theta through the determinant route Re det(U+iI) / Im det(U+iI).

    Accepts one matrix (returns float) or a stack (returns an array).
    """
    U = _check_hermitian(U)
    d = det_plus_i(U, U.shape[-1])
    bad = np.abs(d.imag) < _BRANCH_TOL * np.abs(d)
    if np.any(bad):
        sample = d.ravel()[int(np.argmax(np.ravel(bad)))] if d.ndim else d
        raise PhaseBranchError(
            f"phase at branch: det(U+iI) = {sample!r} has vanishing imaginary part"
        )
    if U.ndim == 2:
        return float(d.real) / float(d.imag)
    return d.real / d.imag


def _f_factor(lam: np.ndarray, cot_theta):
    # diagonal entries of F in the eigenbasis
    if np.ndim(cot_theta):
        cot_theta = np.asarray(cot_theta)[..., None]
    return (1.0 + cot_theta**2) / (1.0 + lam**2)


def linearization(U: np.ndarray):
    """Derivative F of cot Theta; one matrix or a stack.

    Returns (F, trace F); F is Hermitian positive definite.  The pairing
    for a Hermitian direction V is d cot Theta = sum_jk F_jk conj(V_jk).
    """
    U = _check_hermitian(U)
    n = U.shape[-1]
    single = U.ndim == 2
    batch = U[None] if single else U
    lam = _eigvals_batch(batch, n)
    ct = cot(lagrangian_phase(lam))
    F = _f_matrix_batch(batch, lam, ct, n)
    F = 0.5 * (F + np.conj(np.swapaxes(F, -1, -2)))
    tr = np.einsum("...ii->...", F).real
    if single:
        return F[0], float(tr[0])
    return F, tr


def _f_matrix_batch(batch: np.ndarray, lam: np.ndarray, cot_theta: np.ndarray, n: int):
    factor = 1.0 + cot_theta**2
    if n == 1:
        F = np.empty(batch.shape, dtype=np.complex128)
        F[..., 0, 0] = factor / (1.0 + lam[..., 0] ** 2)
        return F
    if n == 2:
        # F = (1 + cot^2 Theta) [ c2 I + slope (U - lam2 I) ] with
        # c_j = 1/(1+lam_j^2) and slope = (c1 - c2)/(lam1 - lam2), whose
        # closed form -(lam1+lam2)/((1+lam1^2)(1+lam2^2)) has no pole at
        # degenerate eigenvalues.
        l1 = lam[..., 0]
        l2 = lam[..., 1]
        c2 = 1.0 / (1.0 + l2**2)
        slope = -(l1 + l2) / ((1.0 + l1**2) * (1.0 + l2**2))
        F = slope[..., None, None] * batch.astype(np.complex128)
        diag_add = c2 - slope * l2
        F[..., 0, 0] += diag_add
        F[..., 1, 1] += diag_add
        return factor[..., None, None] * F
    lamj, Q = _jacobi_eigh(batch)
    f = _f_factor(lamj, cot_theta)
    return np.einsum("...ij,...j,...kj->...ik", Q, f.astype(np.complex128), Q.conj())


@dataclass
class PhaseData:
    """Per-node spectral quantities of a Hessian field.

    eigenvalues: (*interior, n) descending
    theta:       (*interior,) Lagrangian phase
    cot_theta:   (*interior,)
    f_matrix:    (*interior, n, n) derivative of cot Theta, Hermitian PD
    f_trace:     (*interior,) trace of f_matrix
    """

    grid: GridSpec
    eigenvalues: np.ndarray
    theta: np.ndarray
    cot_theta: np.ndarray
    f_matrix: np.ndarray
    f_trace: np.ndarray


def phase_data(hfield: HermitianField) -> PhaseData:
    """Eigenvalues, phase, cot-phase, and linearization at every node."""
    grid = hfield.grid
    n = grid.n
    U = hfield.values
    lam = _eigvals_batch(U, n)
    th = lagrangian_phase(lam)
    ct = cot(th)
    F = _f_matrix_batch(U, lam, ct, n)
    f_trace = (1.0 + ct**2) * np.sum(1.0 / (1.0 + lam**2), axis=-1)
    return PhaseData(grid, lam, th, ct, F, f_trace)
