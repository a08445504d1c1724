"""Randomized self-checks of the matrix kernels.

Every check draws seeded Hermitian matrices, exercises one structural
property of the phase operator or its derivatives, and reports the worst
deviation together with the tolerance it was held to.  The CLI `verify`
subcommand runs all of them and fails on any violation; the same entry
points back the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    arccot,
    cot,
    cot_theta_det,
    det_plus_i,
    hermitian_eigenvalues,
    lagrangian_phase,
    linearization,
)

_DEFAULT_SEED = 20260814


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    samples: int
    detail: str = ""

    def line(self) -> str:
        mark = "ok  " if self.passed else "FAIL"
        return (f"[{mark}] {self.name}: worst {self.worst:.3e} "
                f"(tol {self.tolerance:.1e}, {self.samples} samples){self.detail}"
        )


def _split_counts(samples: int, parts: int) -> list[int]:
    """Per-part draw counts summing exactly to ``samples``."""
    base, rem = divmod(samples, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _random_hermitian_in_band(rng: np.random.Generator, n: int, count: int,
                              lo: float = 0.1, hi: float = math.pi - 0.1):
    """Hermitian batch with entries in [-3, 3] filtered to Theta in (lo, hi)."""
    kept = []
    while sum(len(b) for b in kept) < count:
        m = max(count, 256)
        re = rng.uniform(-3.0, 3.0, size=(m, n, n))
        im = rng.uniform(-3.0, 3.0, size=(m, n, n))
        U = re + 1j * im
        U = 0.5 * (U + np.conj(np.swapaxes(U, -1, -2)))
        th = lagrangian_phase(hermitian_eigenvalues(U))
        good = (th > lo) & (th < hi)
        kept.append(U[good])
    return np.concatenate(kept, axis=0)[:count]


def spectral_cross_check(samples: int = 10_000, seed: int = _DEFAULT_SEED) -> CheckResult:
    """Eigenvalue-route cot Theta against determinant-route cot Theta."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n, m in zip((1, 2, 3), _split_counts(samples, 3)):
        U = _random_hermitian_in_band(rng, n, m)
        lam = hermitian_eigenvalues(U)
        via_eig = cot(lagrangian_phase(lam))
        via_det = cot_theta_det(U)
        rel = np.abs(via_eig - via_det) / (1.0 + np.abs(via_det))
        worst = max(worst, float(np.max(rel)))
    tol = 1e-10
    return CheckResult("spectral cross-check (eig vs det route)",
                       worst <= tol, worst, tol, samples)


def concavity_check(samples: int = 10_000, seed: int = _DEFAULT_SEED + 1) -> CheckResult:
    """Midpoint concavity of lambda -> cot(sum arccot lambda) on (0, pi/2) phases.

    cot Theta is concave on the hypercritical cone, so the midpoint value
    dominates the average of the endpoints (slack for roundoff).
    """
    rng = np.random.default_rng(seed)
    n = 3
    kept_a, kept_b = [], []
    count = 0
    while count < samples:
        m = samples
        a = rng.uniform(0.05, 6.0, size=(m, n))
        b = rng.uniform(0.05, 6.0, size=(m, n))
        good = (lagrangian_phase(a) < math.pi / 2) & (lagrangian_phase(b) < math.pi / 2)
        kept_a.append(a[good])
        kept_b.append(b[good])
        count += int(np.count_nonzero(good))
    a = np.concatenate(kept_a, axis=0)[:samples]
    b = np.concatenate(kept_b, axis=0)[:samples]
    mid = cot(lagrangian_phase(0.5 * (a + b)))
    avg = 0.5 * (cot(lagrangian_phase(a)) + cot(lagrangian_phase(b)))
    worst = float(np.max(avg - mid))
    tol = 1e-12
    return CheckResult("concavity of cot Theta (midpoint dominance)",
                       worst <= tol, worst, tol, samples)


def monotonicity_check(samples: int = 10_000, seed: int = _DEFAULT_SEED + 2) -> CheckResult:
    """Theta decreases under rank-one nonnegative bumps of the Hessian."""
    rng = np.random.default_rng(seed)
    n = 2
    U = _random_hermitian_in_band(rng, n, samples)
    v = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    tvals = rng.uniform(0.0, 2.0, size=samples)
    bump = tvals[:, None, None] * np.einsum("bi,bj->bij", v, np.conj(v))
    th0 = lagrangian_phase(hermitian_eigenvalues(U))
    th1 = lagrangian_phase(hermitian_eigenvalues(U + bump))
    worst = float(np.max(th1 - th0))
    tol = 1e-12
    return CheckResult("phase monotonicity under PSD bumps",
                       worst <= tol, worst, tol, samples)


def interlacing_check(samples: int = 1_000, seed: int = _DEFAULT_SEED + 3) -> CheckResult:
    """Cauchy interlacing of principal-minor eigenvalues, n <= 4."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for n, m in zip((2, 3, 4), _split_counts(samples, 3)):
        re = rng.uniform(-3.0, 3.0, size=(m, n, n))
        im = rng.uniform(-3.0, 3.0, size=(m, n, n))
        U = re + 1j * im
        U = 0.5 * (U + np.conj(np.swapaxes(U, -1, -2)))
        lam = np.sort(hermitian_eigenvalues(U), axis=-1)      # ascending
        mu = np.sort(hermitian_eigenvalues(U[:, : n - 1, : n - 1]), axis=-1)
        # lambda_k <= mu_k <= lambda_{k+1}
        lo = np.max(lam[:, : n - 1] - mu)
        hi = np.max(mu - lam[:, 1:])
        worst = max(worst, float(lo), float(hi))
    tol = 1e-10
    return CheckResult("Cauchy interlacing of principal minors",
                       worst <= tol, worst, tol, samples)


def linearization_gradient_check(samples: int = 1_000,
                                 seed: int = _DEFAULT_SEED + 4,
                                 epsilon: float = 1e-5) -> CheckResult:
    """F against a central difference of cot Theta in random directions.

    d/dt cot Theta(U + t V) = Re tr(F conj(V)') with F Hermitian; the pairing
    is sum_jk F_jk conj(V_jk).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n, m in zip((1, 2, 3), _split_counts(samples, 3)):
        U = _random_hermitian_in_band(rng, n, m, lo=0.2, hi=math.pi - 0.2)
        re = rng.uniform(-1.0, 1.0, size=(m, n, n))
        im = rng.uniform(-1.0, 1.0, size=(m, n, n))
        V = re + 1j * im
        V = 0.5 * (V + np.conj(np.swapaxes(V, -1, -2)))
        F, _ = linearization(U)
        predicted = np.einsum("bjk,bjk->b", F, np.conj(V)).real
        plus = cot_theta_det(U + epsilon * V)
        minus = cot_theta_det(U - epsilon * V)
        fd = (plus - minus) / (2.0 * epsilon)
        rel = np.abs(predicted - fd) / (1.0 + np.abs(fd))
        worst = max(worst, float(np.max(rel)))
    tol = 1e-6
    return CheckResult("linearization vs finite-difference gradient",
                       worst <= tol, worst, tol, samples)


def density_identity_check(samples: int = 10_000,
                           seed: int = _DEFAULT_SEED + 5) -> CheckResult:
    """Im(e^{-i hat} d) = -sin(hat) (cot Theta - cot hat) Im d on random inputs."""
    rng = np.random.default_rng(seed)
    hat = rng.uniform(0.05, math.pi / 2 - 0.05)
    worst = 0.0
    for n, m in zip((1, 2, 3), _split_counts(samples, 3)):
        U = _random_hermitian_in_band(rng, n, m)
        d = det_plus_i(U, n)
        lhs = (np.exp(-1j * hat) * d).imag
        rhs = -math.sin(hat) * (cot_theta_det(U) - cot(hat)) * d.imag
        scale = 1.0 + np.abs(d)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    tol = 1e-12
    return CheckResult("density identity (rotated imaginary part)",
                       worst <= tol, worst, tol, samples,
                       detail=f"; hat_theta = {hat:.4f}")


def run_all(seed: int = 0) -> list[CheckResult]:
    """All checks with a user seed offsetting the fixed base seeds."""
    base = _DEFAULT_SEED + seed
    return [
        spectral_cross_check(seed=base),
        concavity_check(seed=base + 1),
        monotonicity_check(seed=base + 2),
        interlacing_check(seed=base + 3),
        linearization_gradient_check(seed=base + 4),
        density_identity_check(seed=base + 5),
    ]
