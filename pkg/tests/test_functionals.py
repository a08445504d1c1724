import warnings

import numpy as np
import pytest

from dhym.errors import PhaseBranchError
from dhym.flow import DiagnosticsRow
from dhym.functionals import (
    cy_functional,
    density,
    dissipation,
    gradient_flow_check,
    j_functional,
    path_independence_check,
    variation_check,
    volume_normalization,
)
from dhym.grid import ScalarField, integrate_interior, make_grid, sample_function
from dhym.hessian import complex_hessian
from dhym.spectral import lagrangian_phase
from tests.conftest import SQRT3, random_hermitian


def test_volume_normalization():
    assert volume_normalization(1) == 2
    assert volume_normalization(2) == 8
    assert volume_normalization(3) == 48


def scaled_sq(grid, a):
    n = grid.n
    return sample_function(
        grid,
        lambda *c: a * sum(c[k] ** 2 for k in range(2 * n)),
    )


def test_density_point_values(grid1):
    u0 = scaled_sq(grid1, 0.0)
    d = density(complex_hessian(u0))
    assert np.allclose(d.values, 1j, atol=1e-14)
    assert np.all(d.im > 0)

    g2 = make_grid(2, [-1] * 4, [1] * 4, [7] * 4)
    d2 = density(complex_hessian(scaled_sq(g2, SQRT3)))
    assert np.allclose(d2.values, 2 + 2j * SQRT3, atol=1e-12)


def test_density_sign_tracks_phase():
    # Im det(U + iI) = sin(Theta) / prod sin(arccot lam): positive exactly
    # on the principal branch
    rng = np.random.default_rng(21)
    for U in random_hermitian(rng, 2, count=200, scale=4.0):
        lam = np.linalg.eigvalsh(U)
        th = float(lagrangian_phase(lam))
        im = float(np.linalg.det(U + 1j * np.eye(2)).imag)
        assert (im > 0) == (0 < th < np.pi)


def test_cy_equals_boundary_term_when_endpoints_match(grid1):
    psi = scaled_sq(grid1, 0.7)
    got = cy_functional(psi, psi, s_samples=5)
    d = density(complex_hessian(psi))
    expected = (volume_normalization(1) * grid1.cell_volume
                * np.sum(psi.interior() * d.values))
    assert got == pytest.approx(expected, rel=1e-13)

    zero = scaled_sq(grid1, 0.0)
    assert cy_functional(zero, zero) == 0


@pytest.mark.parametrize("a", [0.25, 0.5, 1.0])
def test_cy_closed_form_quadratic(grid1, a):
    # phi = 0, psi = a|z|^2, n = 1: the s-integrand is quadratic so
    # Simpson is exact, and both integrals reduce to the second moment
    # M of the interior nodes
    phi = scaled_sq(grid1, 0.0)
    psi = scaled_sq(grid1, a)
    M = integrate_interior(sample_function(grid1, lambda x, y: x * x + y * y))
    expected = a * a * M + 2j * a * M
    with pytest.warns(UserWarning, match="boundary"):
        got = cy_functional(phi, psi, s_samples=5)
    assert got == pytest.approx(expected, rel=1e-13)
    # more s-samples change nothing beyond roundoff
    with pytest.warns(UserWarning, match="boundary"):
        again = cy_functional(phi, psi, s_samples=65)
    assert abs(again - got) < 1e-12 * (1 + abs(got))


def test_cy_warns_on_boundary_mismatch(grid1):
    phi = scaled_sq(grid1, 0.0)
    psi = scaled_sq(grid1, 0.5)
    with pytest.warns(UserWarning, match="boundary"):
        cy_functional(phi, psi, s_samples=5)


def test_path_independence_trivial(grid1):
    psi = scaled_sq(grid1, 0.9)
    assert path_independence_check(psi, psi, s_samples=9) == 0.0


def test_path_independence_quadratic_pair(grid1):
    phi = scaled_sq(grid1, 0.0)
    psi = scaled_sq(grid1, 0.5)
    with pytest.warns(UserWarning, match="boundary"):
        diff = path_independence_check(phi, psi, s_samples=65)
        ref = abs(cy_functional(phi, psi, s_samples=65))
    assert diff <= 1e-8 * (1 + ref)


def test_path_independence_smooth_pair_n2():
    g = make_grid(2, [-1] * 4, [1] * 4, [9] * 4)
    phi = scaled_sq(g, SQRT3)
    psi = sample_function(
        g,
        lambda x1, y1, x2, y2: SQRT3 * (x1**2 + y1**2 + x2**2 + y2**2)
        + 0.1 * np.sin(np.pi * x1) * np.sin(np.pi * y1)
        * np.sin(np.pi * x2) * np.sin(np.pi * y2),
    )
    diff = path_independence_check(phi, psi, s_samples=65)
    ref = abs(cy_functional(phi, psi, s_samples=65))
    assert diff <= 1e-6 * (1 + ref)


def bump_field(grid, amp=1.0):
    n = grid.n
    return sample_function(
        grid,
        lambda *c: amp * np.prod([(1 - c[k] ** 2) ** 2 for k in range(2 * n)], axis=0),
    )


def test_variation_zero_direction(grid1):
    psi = scaled_sq(grid1, 0.8)
    eta = ScalarField(grid1, np.zeros(grid1.shape))
    assert variation_check(psi, eta) == 0.0


def test_variation_residual_small(grid1):
    psi = scaled_sq(grid1, 0.8)
    eta = bump_field(grid1)
    assert variation_check(psi, eta) <= 1e-6


def test_variation_n2():
    g = make_grid(2, [-1] * 4, [1] * 4, [7] * 4)
    psi = scaled_sq(g, SQRT3)
    eta = bump_field(g, amp=0.5)
    assert variation_check(psi, eta) <= 1e-6


def test_variation_linearity(grid1):
    # the directional derivative is linear in eta: doubling eta doubles it
    psi = scaled_sq(grid1, 0.8)
    eta = bump_field(grid1, amp=0.3)
    eta2 = ScalarField(grid1, 2.0 * eta.values)
    eps = 1e-4

    def derivative(e):
        up = ScalarField(grid1, psi.values + eps * e.values)
        dn = ScalarField(grid1, psi.values - eps * e.values)
        return (cy_functional(psi, up, s_samples=33)
                - cy_functional(psi, dn, s_samples=33)) / (2 * eps)

    d1, d2 = derivative(eta), derivative(eta2)
    assert abs(d2 - 2 * d1) <= 1e-8 * (1 + abs(d1))


def test_variation_rejects_boundary_supported_direction(grid1):
    psi = scaled_sq(grid1, 0.8)
    eta = ScalarField(grid1, np.ones(grid1.shape))
    with pytest.raises(ValueError, match="boundary"):
        variation_check(psi, eta)


def test_j_functional_arithmetic(grid1):
    phi = scaled_sq(grid1, 0.0)
    a = 0.5
    psi = scaled_sq(grid1, a)
    M = integrate_interior(sample_function(grid1, lambda x, y: x * x + y * y))
    hat = np.pi / 4
    with pytest.warns(UserWarning, match="boundary"):
        got = j_functional(phi, psi, hat, s_samples=5)
    expected = np.cos(hat) * (2 * a * M) - np.sin(hat) * (a * a * M)
    assert got == pytest.approx(expected, rel=1e-13)

    # hat_theta -> 0 limit recovers Im CY
    with pytest.warns(UserWarning, match="boundary"):
        j0 = j_functional(phi, psi, 1e-12, s_samples=5)
    assert j0 == pytest.approx(2 * a * M, rel=1e-9)


def test_dissipation_flat_state(grid1):
    u = scaled_sq(grid1, 0.0)
    hat = np.pi / 4
    # Theta(0) = pi/2 so the flow speed is exactly -cot(hat) = -1
    dt_u = np.full(grid1.interior_shape, -1.0)
    got = dissipation(u, dt_u, hat)
    area = integrate_interior(sample_function(grid1, lambda x, y: np.ones_like(x)))
    assert got == pytest.approx(np.sin(hat) * 2.0 * area, rel=1e-13)


def test_dissipation_zero_and_nonnegative(grid1):
    u = scaled_sq(grid1, 0.6)
    assert dissipation(u, np.zeros(grid1.interior_shape), 0.7) == 0.0
    rng = np.random.default_rng(9)
    for _ in range(5):
        w = rng.standard_normal(grid1.interior_shape)
        assert dissipation(u, w, 0.7) >= 0.0


def _rows(ts, js, ss):
    return [
        DiagnosticsRow(t=t, j=j, s=s, sup_dtu=0.0, theta_min=1.0,
                       theta_max=1.0, lambda_min=1.0, residual=0.0,
                       comparison_ok=True)
        for t, j, s in zip(ts, js, ss)
    ]


def test_gradient_flow_check_stationary_guarded():
    rows = _rows([0.0, 0.1, 0.2, 0.3], [5.0] * 4, [0.0] * 4)
    assert gradient_flow_check(rows) == 0.0


def test_gradient_flow_check_exact_synthetic():
    # J(t) = e^{-2t}, S = -dJ/dt = 2 e^{-2t}: central differences agree
    # to O(dt^2), so the relative residual is small but nonzero
    ts = np.linspace(0.0, 1.0, 201)
    js = np.exp(-2 * ts)
    ss = 2 * np.exp(-2 * ts)
    res = gradient_flow_check(_rows(ts, js, ss))
    assert 0 < res < 1e-4


def test_gradient_flow_check_flags_wrong_sign():
    ts = np.linspace(0.0, 1.0, 51)
    js = np.exp(-ts)
    ss = -np.exp(-ts)          # wrong sign: dJ/dt + S ~ -2S
    assert gradient_flow_check(_rows(ts, js, ss)) > 1.0


def test_cy_path_phase_guard():
    # with n = 2 a steep concave endpoint has Theta > pi, so the linear
    # path leaves the principal branch and must be refused
    g = make_grid(2, [-1] * 4, [1] * 4, [5] * 4)
    phi = scaled_sq(g, -30.0)
    psi = scaled_sq(g, 30.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        with pytest.raises(PhaseBranchError):
            cy_functional(phi, psi, s_samples=9)
