import math

import numpy as np
import pytest

from heiscurv import (AffineNormError, NormSpec, PrescriptionError, RunConfig, TrigTable, build_norm,
                      curvature_exponent, hfamily_ratio, hfamily_sup_ratio, mcp_ratio_check, n_field,
                      prescribe_exponent, reduced_jacobian, rigidity_probe)
from heiscurv.curvature import arc_values, disc_ratio, hfamily_values
from heiscurv.geometry import jacobian_parts
from heiscurv.norms import GraphArc, disc_arc

from .conftest import table_for


def euclid_n(w):
    return 1 + w * (np.sin(w) - w * np.cos(w)) / (2 - 2 * np.cos(w) - w * np.sin(w))


def test_n_field_euclidean(euclid):
    w = np.linspace(0.05, 6.2, 50)
    np.testing.assert_allclose(n_field(euclid, 0.3, w), euclid_n(w), rtol=1e-7)
    assert n_field(euclid, 0.0, math.pi) == pytest.approx(1 + math.pi**2 / 4, rel=1e-12)
    assert n_field(euclid, 1.0, 1e-6) == 5.0
    # the exact zero at a full turn is not evaluated
    assert math.isnan(n_field(euclid, 0.0, 2 * math.pi))


def test_n_field_tends_to_five(smooth_table):
    any_table = smooth_table
    phi = np.linspace(0, 2 * any_table.pi_polar, 16)[:-1] + 0.05
    for w in (1e-2, -1e-2, 1e-3):
        assert np.max(np.abs(n_field(any_table, phi, w) - 5)) < 0.1


def test_limit_into_r_half(interp):
    per = 2 * interp.pi_polar
    s = np.arange(256) / 256
    for r in (0.5 - 1e-3, 0.5 + 1e-3):
        assert np.max(np.abs(n_field(interp, per * s, per * (2 * r - 1)) - 5)) <= 0.05


def test_curvature_exponent_inner_products(euclid, diag14):
    rep = curvature_exponent(euclid)
    assert abs(rep.n_curv - 5) <= 5e-3
    assert rep.band_violations == 0
    assert abs(curvature_exponent(diag14).n_curv - 5) <= 1e-2
    assert abs(curvature_exponent(table_for("skew"), grid=(128, 256)).n_curv - 5) <= 1e-2


def test_curvature_exponent_interpolated(interp):
    rep = curvature_exponent(interp)
    assert rep.n_curv >= 5.05
    assert not rep.at_limit
    # the reported maximizer reproduces the value
    assert n_field(interp, *rep.argmax) == pytest.approx(rep.n_curv, rel=1e-10)
    # refinement only ever raises the grid maximum, and not by much
    assert rep.grid_max <= rep.n_curv <= rep.grid_max + 1e-3
    d = rep.to_dict()
    assert set(d["argmax"]) == {"phi", "omega"} and "elapsed" not in d


def test_lower_bound_all_families(any_table):
    assert curvature_exponent(any_table, grid=(64, 128)).n_curv >= 5 - 1e-3


def test_not_strongly_convex_has_no_finite_exponent():
    table = table_for("l4")
    rep = curvature_exponent(table, grid=(128, 256))
    assert math.isinf(rep.n_curv) and rep.note
    # the ratio test agrees: no moderate N passes
    assert not mcp_ratio_check(table, 30.0).passed


def test_grid_refinement_is_stable(interp):
    coarse = curvature_exponent(interp, grid=(128, 256)).n_curv
    fine = curvature_exponent(interp).n_curv
    assert abs(coarse - fine) < 1e-2


def test_mcp_ratio_check(euclid, interp):
    assert mcp_ratio_check(euclid, 5.0).passed
    res = mcp_ratio_check(euclid, 4.9)
    assert not res.passed
    assert abs(res.worst["omega"]) < 0.1 and 0 < res.worst["t"] < 1
    n = curvature_exponent(interp).n_curv
    assert mcp_ratio_check(interp, n + 0.05).passed
    assert not mcp_ratio_check(interp, n - 0.05).passed
    with pytest.raises(ValueError):
        mcp_ratio_check(euclid, 1.0)


def test_rigidity_probe(interp, euclid, diag14):
    w = rigidity_probe(interp)
    assert w.H > 0 and 0 < w.r_violation < 1
    assert w.ratio < w.r4_threshold and w.verified
    # independent evaluation at the reported witness
    again = reduced_jacobian(interp, w.phi, w.r_violation * w.omega) / reduced_jacobian(interp, w.phi, w.omega)
    assert again < w.r_violation**4
    assert w.ratio_check == pytest.approx(again, rel=1e-6)
    for table in (euclid, diag14):
        with pytest.raises(AffineNormError):
            rigidity_probe(table)


def test_rigidity_probe_l4():
    w = rigidity_probe(table_for("l4"))
    assert w.verified and w.ratio < w.r4_threshold


def test_prescribe_trivial_endpoint():
    res = prescribe_exponent(5 + 1e-6, 4.0, 0.01)
    assert res.t_star == 0.0
    assert abs(res.report.n_curv - 5) <= 5e-3


def test_interpolation_family_grows():
    cfg = RunConfig()
    lo = curvature_exponent(TrigTable(build_norm(NormSpec("interpolated", {"q": 4, "t": 0.1})), 1024), cfg, grid=(128, 256))
    hi = curvature_exponent(TrigTable(build_norm(NormSpec("interpolated", {"q": 4, "t": 0.9})), 1024), cfg, grid=(128, 256))
    assert hi.n_curv > lo.n_curv > 5


def test_prescribe_reports_missing_bracket():
    with pytest.raises(PrescriptionError) as info:
        prescribe_exponent(1000.0, 4.0, 0.01)
    assert len(info.value.profile) >= 2
    with pytest.raises(ValueError):
        prescribe_exponent(4.0)


# closed forms along a graph arc ------------------------------------------

def test_arc_formulas_on_disc():
    # the generic arc formulas reproduce the Euclidean field on the unit circle
    y = np.linspace(0.01, 0.45, 30)
    v = arc_values(disc_arc(), y)
    np.testing.assert_allclose(v.omega, np.arcsin(y), rtol=1e-13)
    np.testing.assert_allclose(v.jr, 2 - 2 * np.cos(v.omega) - v.omega * np.sin(v.omega), rtol=1e-8, atol=1e-15)
    big = y > 0.05  # below this both sides carry cancellation noise
    np.testing.assert_allclose(disc_ratio(y)[big], euclid_n(v.omega[big]) - 1, rtol=1e-7)


def test_arc_formulas_match_pipeline():
    # arc formulas against the trig-table pipeline on the completed h-family norm
    table = TrigTable(build_norm(NormSpec("hfamily", {"h": 8})))
    # away from the end of the arc, where the completion is glued on
    y = np.linspace(0.02, 0.1, 5)
    v = hfamily_values(8, y)
    j, dj = jacobian_parts(table, 0.0 * y, v.omega)
    np.testing.assert_allclose(j, v.jr, rtol=1e-6)
    np.testing.assert_allclose(v.omega * dj, v.wdjr, rtol=1e-4)


def test_hfamily_large_h_limit():
    parabola = GraphArc(lambda y: 1 - y**2, lambda y: -2 * y, lambda y: -2 + 0 * y,
                        lambda y: y - y**3 / 3, 0.5, "parabola")
    y = np.array([0.004, 0.006])
    np.testing.assert_allclose(hfamily_values(64, y).ratio, arc_values(parabola, y).ratio, rtol=1e-6)


def test_hfamily_ratio_trend():
    vals = [hfamily_ratio(h, 1 / h) for h in (8, 16, 32, 64)]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        hfamily_ratio(8, 0.2)


def test_hfamily_sup_ratio_scales_with_h():
    for h in (8, 32, 64):
        sup, y = hfamily_sup_ratio(h)
        assert 0 < y < 1 / h
        assert 1.0 < sup / h < 1.5
