import math

import numpy as np
import pytest

from heiscurv import (NormSpec, TrigTable, affine_check, build_norm, correspondence,
                      correspondence_by_pythagoras, correspondence_derivative, cos_sin, cos_sin_polar,
                      second_difference)
from heiscurv.trig import correspondence_derivative_fd

from .conftest import table_for


def shoelace(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def dense_sphere(norm, n=400_000):
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    u = np.c_[np.cos(a), np.sin(a)]
    return u / norm.value(u)[:, None]


def test_euclidean_table(euclid):
    assert euclid.pi_omega == pytest.approx(math.pi, abs=1e-10)
    assert euclid.pi_polar == pytest.approx(math.pi, abs=1e-10)
    th = euclid.theta_grid
    np.testing.assert_allclose(euclid.points, np.c_[np.cos(th), np.sin(th)], atol=1e-12)
    np.testing.assert_allclose(cos_sin(euclid, math.pi / 2), [0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(cos_sin(euclid, math.pi / 4), [math.sqrt(0.5)] * 2, atol=1e-8)


@pytest.mark.parametrize("b", [0.5, 2.0, 3.0])
def test_ellipse_half_area(b):
    t = TrigTable(build_norm(NormSpec("inner_product", {"matrix": [[1, 0], [0, 1 / b**2]]})), 1024)
    assert t.pi_omega == pytest.approx(math.pi * b, rel=1e-10)
    assert t.pi_polar == pytest.approx(math.pi / b, rel=1e-10)


def test_l4_half_area_against_shoelace(l4):
    assert l4.pi_omega == pytest.approx(shoelace(dense_sphere(l4.norm)), rel=1e-8)
    assert l4.pi_polar == pytest.approx(shoelace(dense_sphere(l4.dual)), rel=1e-8)


def test_boundary_curve_invariants(any_table):
    for curve, area in ((any_table.boundary_curve(), any_table.pi_omega),
                        (any_table.dual_boundary_curve(), any_table.pi_polar)):
        assert np.all(np.diff(curve.cumulative_area) > 0)
        assert curve.enclosed_area() == pytest.approx(area, rel=1e-12)
        assert curve.enclosed_area() == pytest.approx(shoelace(curve.samples), rel=1e-5)


def test_points_on_sphere(any_table):
    assert np.max(np.abs(any_table.norm.value(any_table.points) - 1)) <= 1e-9
    assert np.max(np.abs(any_table.dual.value(any_table.dual_points) - 1)) <= 1e-9
    assert abs(cos_sin(any_table, 0.0)[1]) <= 1e-12
    assert abs(cos_sin_polar(any_table, 0.0)[1]) <= 1e-12


def test_periodic_wrapping(any_table):
    th = np.linspace(-3, 3, 17)
    np.testing.assert_allclose(cos_sin(any_table, th + 2 * any_table.pi_omega), cos_sin(any_table, th),
                               atol=1e-13)
    ph = np.linspace(-3, 3, 17)
    shift = correspondence(any_table, ph + 2 * any_table.pi_polar) - correspondence(any_table, ph)
    np.testing.assert_allclose(shift, 2 * any_table.pi_omega, rtol=1e-13)


def test_pythagorean_equality(any_table):
    rng = np.random.default_rng(11)
    phi = rng.uniform(0, 2 * any_table.pi_polar, 1000)
    p = cos_sin(any_table, correspondence(any_table, phi))
    q = cos_sin_polar(any_table, phi)
    assert np.max(np.abs(np.sum(p * q, axis=1) - 1)) <= 1e-8
    # any other pair stays below one
    theta = rng.uniform(0, 2 * any_table.pi_omega, 1000)
    assert np.all(np.sum(cos_sin(any_table, theta) * q, axis=1) <= 1 + 1e-12)


def test_correspondence_routes_agree(any_table):
    phi = np.linspace(0.1, 2 * any_table.pi_polar - 0.1, 7)
    ref = np.array([correspondence_by_pythagoras(any_table, p) for p in phi])
    gap = np.abs(correspondence(any_table, phi, verify=True) - ref)
    assert np.all(gap <= 1e-7 * np.maximum(1.0, any_table.ccirc_prime(phi)))


def test_correspondence_identities(euclid, diag14):
    phi = np.linspace(0, 6, 13)
    np.testing.assert_allclose(correspondence(euclid, phi), phi, atol=1e-12)
    np.testing.assert_allclose(correspondence_derivative(euclid, phi), 1.0, atol=1e-12)
    np.testing.assert_allclose(correspondence_derivative(diag14, diag14.phi_grid), 0.25, atol=1e-6)


def test_inverse_correspondence(any_table):
    phi = any_table.phi_grid
    assert np.max(np.abs(any_table.ccirc_inverse(any_table.ccirc_samples) - phi)) <= 1e-7
    assert np.all(np.diff(any_table.ccirc_samples) > 0)


def test_derivative_formulas_by_finite_differences(any_table):
    # d/dphi (cos, sin)_polar = (-sin, cos)_Omega at the corresponding angle
    phi = np.linspace(0.05, 2 * any_table.pi_polar - 0.05, 101)
    exact = cos_sin(any_table, correspondence(any_table, phi))
    errs = []
    for h in (1e-2, 1e-3):
        d = (cos_sin_polar(any_table, phi + h) - cos_sin_polar(any_table, phi - h)) / (2 * h)
        errs.append(max(np.max(np.abs(d[:, 1] - exact[:, 0])), np.max(np.abs(d[:, 0] + exact[:, 1]))))
    assert math.log10(errs[0] / errs[1]) >= 1.8


def test_analytic_derivative_matches_one_cell_difference(interp):
    phi = interp.phi_grid[::64]
    np.testing.assert_allclose(correspondence_derivative_fd(interp, phi), correspondence_derivative(interp, phi),
                               rtol=1e-4)


def test_l43_correspondence_derivative():
    t = table_for("l43")
    cp = t.ccirc_prime_samples
    assert np.all(cp >= 0)
    # the dual sphere (l^4) is flat to second order on the axes, where C' vanishes
    np.testing.assert_allclose(t.ccirc_prime(np.array([0.0, t.pi_polar / 2])), 0.0, atol=1e-12)
    assert np.min(cp[cp > 0]) > 0


def test_second_difference(euclid, interp):
    phi, om = np.meshgrid(np.linspace(0, 6, 20), np.linspace(0.01, 1, 20))
    np.testing.assert_allclose(second_difference(euclid, phi, om), 0.0, atol=1e-9)
    d2 = second_difference(interp, phi, om)
    direct = (correspondence(interp, phi + 2 * om) - 2 * correspondence(interp, phi + om)
              + correspondence(interp, phi)) / om**2
    np.testing.assert_array_equal(d2, direct)
    assert np.max(d2) > 0
    with pytest.raises(ValueError):
        second_difference(interp, 0.0, 0.0)


def test_affine_check(euclid, diag14, interp):
    fit = affine_check(euclid)
    assert fit.affine and fit.slope == pytest.approx(1.0, abs=1e-12)
    fit = affine_check(diag14)
    assert fit.affine and fit.ode_residual <= 1e-6
    assert fit.slope == pytest.approx(0.25, abs=1e-10)
    assert not affine_check(interp).affine
    assert affine_check(table_for("skew")).affine


def test_rejects_low_resolution():
    with pytest.raises(ValueError):
        TrigTable(build_norm(NormSpec("euclidean", {})), 32)


@pytest.mark.parametrize("name", ["skew", "interp", "l4", "l43"])
def test_dual_correspondence_is_inverse(name):
    table = table_for(name)
    dual = table.dual_table
    assert abs(table.ccirc(0.0)) <= table.pi_omega
    phi = table.phi_grid
    c = table.ccirc(phi)
    # measured where the outer map is not steep
    gap = np.abs(dual.ccirc(c) - phi) / np.maximum(1.0, dual.ccirc_prime(c))
    assert np.max(gap) <= 1e-7
