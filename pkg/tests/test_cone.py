import numpy as np
import pytest

from dhym.cone import (
    check_compatibility,
    elliptic_subsolution_check,
    in_gamma,
    parabolic_margin,
)
from dhym.config import config_from_dict
from dhym.errors import PhaseBranchError
from dhym.hessian import complex_hessian
from dhym.grid import make_grid, sample_function
from dhym.spectral import arccot, lagrangian_phase
from tests.conftest import SQRT3


def constant_hessian_field(n, A, pts=7):
    g = make_grid(n, [-1] * (2 * n), [1] * (2 * n), [pts] * (2 * n))

    def f(*coords):
        z = [coords[2 * j] + 1j * coords[2 * j + 1] for j in range(n)]
        vals = np.zeros_like(coords[0])
        for j in range(n):
            for k in range(n):
                vals = vals + np.real(A[j, k] * z[j] * np.conj(z[k]))
        return vals

    return complex_hessian(sample_function(g, f))


def test_in_gamma_examples():
    assert in_gamma(np.array([SQRT3, SQRT3])) is True
    assert in_gamma(np.array([1.0, 1.0])) is False          # Theta = pi/2 exactly
    assert in_gamma(np.array([SQRT3, SQRT3]), sigma=np.pi / 4) is False
    batch = np.array([[SQRT3, SQRT3], [1.0, 1.0]])
    assert in_gamma(batch).tolist() == [True, False]


def test_in_gamma_implies_positive_eigenvalues():
    # Theta < pi/2 forces each arccot below pi/2, hence every lambda > 0
    rng = np.random.default_rng(5)
    lam = rng.uniform(-2.0, 8.0, size=(4000, 3))
    inside = in_gamma(lam)
    assert inside.any()
    assert np.all(lam[inside] > 0.0)


def test_elliptic_subsolution_examples():
    ok = elliptic_subsolution_check(
        constant_hessian_field(2, 2.0 * np.eye(2)), np.pi / 3
    )
    assert ok.ok
    assert ok.worst == pytest.approx(np.arctan(0.5), abs=1e-13)

    bad = elliptic_subsolution_check(
        constant_hessian_field(2, np.diag([0.1, 10.0])), 0.8
    )
    assert not bad.ok
    assert not bad.flags.any()
    assert bad.worst == pytest.approx(float(arccot(0.1)), abs=1e-13)


def test_elliptic_subsolution_n1_vacuous():
    rep = elliptic_subsolution_check(constant_hessian_field(1, np.array([[5.0]])), 0.2)
    assert rep.ok
    assert rep.worst == pytest.approx(0.0, abs=1e-15)


def test_parabolic_margin_stationary_example():
    # sqrt(3)|z|^2 at hat_theta = pi/3: cot(pi/6) - cot(pi/3) = 2/sqrt(3)
    H = constant_hessian_field(2, SQRT3 * np.eye(2))
    rep = parabolic_margin(H, None, np.pi / 3)
    assert not rep.vacuous
    assert rep.margin == pytest.approx(2.0 / SQRT3, abs=1e-12)


def test_parabolic_margin_n1_vacuous():
    rep = parabolic_margin(constant_hessian_field(1, np.array([[2.0]])), None, 0.7)
    assert rep.vacuous
    assert rep.margin == float("inf")
    assert "vacuous" in rep.note or "unconditional" in rep.note


def test_parabolic_margin_large_dt_negative():
    H = constant_hessian_field(2, SQRT3 * np.eye(2))
    g = H.grid
    big = np.full(g.interior_shape, 50.0)
    rep = parabolic_margin(H, big, np.pi / 3)
    assert rep.margin < 0


def test_parabolic_margin_branch_error():
    # lambda far outside Gamma: with n = 3 two very negative directions
    # push a two-term partial sum past pi
    H = constant_hessian_field(3, np.diag([-50.0, -50.0, -50.0]), pts=5)
    with pytest.raises(PhaseBranchError):
        parabolic_margin(H, None, np.pi / 3)


def test_margin_consistent_with_worst_partial_sum():
    # for constant-Hessian subsolutions the two reports agree exactly:
    # margin = cot(worst partial sum) - cot(hat_theta)
    rng = np.random.default_rng(17)
    tested = 0
    while tested < 20:
        d = rng.uniform(0.3, 6.0, 2)
        hat = rng.uniform(0.3, np.pi / 2 - 0.05)
        H = constant_hessian_field(2, np.diag(d), pts=5)
        rep = elliptic_subsolution_check(H, hat)
        if not rep.ok:
            continue
        mar = parabolic_margin(H, None, hat)
        assert mar.margin == pytest.approx(
            1.0 / np.tan(rep.worst) - 1.0 / np.tan(hat), rel=1e-12
        )
        assert mar.margin > 0
        tested += 1


def _theta2(lam1, lam2):
    return arccot(lam1) + arccot(lam2)


def test_boundedness_equivalence_bruteforce():
    """Solution-set boundedness matches the partial-sum criterion.

    For lambda in Gamma and hypercritical hat_theta, the set
    {mu >= 0 : Theta(lambda + mu) = hat_theta} is bounded exactly when
    max_j sum_{i != j} arccot(lambda_i) < hat_theta.  We probe the set
    along rays whose slopes are log-spaced down to 1e-3 and bisect the
    (strictly decreasing) phase along each ray out to |mu| = 2e3.  A
    gap of 0.1 between the partial sum and hat_theta keeps the two
    regimes separated: held => every root lands below cot(0.1)*sqrt(2),
    violated => the shallowest ray carries a root past 100.
    """
    rng = np.random.default_rng(2026)
    slopes = [0.0, 1e-3, 1e-2, 1e-1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e3, np.inf]
    dirs = []
    for s in slopes:
        v = np.array([0.0, 1.0]) if np.isinf(s) else np.array([1.0, s])
        dirs.append(v / np.linalg.norm(v))
    dirs = np.array(dirs)          # (m, 2)
    T = 2e3
    R = 50.0

    samples = 0
    agree = 0
    while samples < 1000:
        lam = rng.uniform(0.05, 10.0, 2)
        hat = rng.uniform(0.15, np.pi / 2 - 0.02)
        th = float(_theta2(*lam))
        if not (0 < th < np.pi / 2):
            continue
        worst = float(max(arccot(lam[0]), arccot(lam[1])))
        if abs(worst - hat) < 0.1:
            continue           # marginal cases: ray sampling cannot resolve
        held = worst < hat

        lo = np.zeros(len(dirs))
        hi = np.full(len(dirs), T)
        f0 = _theta2(lam[0] + lo * dirs[:, 0], lam[1] + lo * dirs[:, 1]) - hat
        fT = _theta2(lam[0] + hi * dirs[:, 0], lam[1] + hi * dirs[:, 1]) - hat
        has_root = (f0 > 0) & (fT < 0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = _theta2(lam[0] + mid * dirs[:, 0], lam[1] + mid * dirs[:, 1]) - hat
            hi = np.where(fm < 0, mid, hi)
            lo = np.where(fm < 0, lo, mid)
        roots = 0.5 * (lo + hi)
        found = roots[has_root]
        bounded = found.size == 0 or float(np.max(found)) < R

        if bounded == held:
            agree += 1
        samples += 1

    assert agree == samples


def _cfg(initial, boundary, **overrides):
    data = {
        "n": 2,
        "box": {"lo": [-1, -1, -1, -1], "hi": [1, 1, 1, 1]},
        "points_per_axis": [7, 7, 7, 7],
        "hat_theta": {"pi_fraction": [1, 3]},
        "theta0": 0.3,
        "t_end": 1.0,
        "initial": initial,
        "boundary": boundary,
        "output": {"directory": ".", "cadence": 0.0},
    }
    data.update(overrides)
    return config_from_dict(data)


QUAD = {"family": "quadratic", "matrix": [[SQRT3, 0], [0, SQRT3]]}


def test_compatibility_passes_for_matching_data():
    rep = check_compatibility(_cfg(QUAD, QUAD))
    assert rep.passed
    assert rep.c1_defect <= 1e-12
    assert rep.violations == []
    assert "ok" in rep.summary()


def test_compatibility_flags_initial_boundary_mismatch():
    shifted = {"family": "expression",
               "expression": "sqrt(3)*(x1**2 + y1**2 + x2**2 + y2**2) + 0.5"}
    rep = check_compatibility(_cfg(QUAD, shifted))
    assert not rep.c1_ok
    assert rep.c1_defect == pytest.approx(0.5, abs=1e-12)
    assert any(v["condition"] == "C1" for v in rep.violations)
    assert not rep.passed


def test_compatibility_flags_flat_initial_phase():
    # Hess = 0 gives Theta = n*pi/2 = pi, violating both the initial
    # phase window and the boundary band
    flat = {"family": "quadratic", "matrix": [[0, 0], [0, 0]]}
    rep = check_compatibility(_cfg(flat, flat))
    assert not rep.initial_phase_ok
    assert not rep.c2_ok
    conds = {v["condition"] for v in rep.violations}
    assert "(1.2)" in conds and "C2" in conds
    assert all("node" in v for v in rep.violations if v["condition"] != "C1")


def test_compatibility_flags_band_violation_only():
    # Theta = 2*arccot(5) ~ 0.395 < theta0=0.5: inside (0, pi/2) but
    # outside the declared boundary band
    steep = {"family": "quadratic", "matrix": [[5.0, 0], [0, 5.0]]}
    rep = check_compatibility(_cfg(steep, steep, theta0=0.5))
    assert rep.initial_phase_ok
    assert rep.c1_ok
    assert not rep.c2_ok
