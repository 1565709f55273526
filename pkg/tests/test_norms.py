import numpy as np
import pytest

from heiscurv import NormError, NormSpec, build_norm, dual_value, is_strongly_convex
from heiscurv.norms import GaugeSplineNorm, hfamily_boundary, strong_convexity_margin

from .conftest import SPECS, wobbly_samples

ALL = ["euclidean", "diag14", "skew", "l4", "l43", "interp", "samples"]


def rand_vectors(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, 2)) * rng.uniform(0.1, 10.0, size=(n, 1))


def test_euclidean_value():
    assert build_norm(SPECS["euclidean"]).value(np.array([3.0, 4.0])) == pytest.approx(5.0, abs=1e-15)


def test_identity_matrix_is_euclidean():
    v = rand_vectors(100)
    a = build_norm(NormSpec("inner_product", {"matrix": [[1, 0], [0, 1]]})).value(v)
    np.testing.assert_allclose(a, np.linalg.norm(v, axis=1), rtol=1e-14)


def test_interpolated_endpoint_is_euclidean():
    v = rand_vectors(200)
    n = build_norm(NormSpec("interpolated", {"q": 4, "t": 0.0}))
    np.testing.assert_allclose(n.value(v), np.linalg.norm(v, axis=1), rtol=1e-12)


@pytest.mark.parametrize("name", ALL)
def test_norm_axioms(name):
    n = build_norm(SPECS[name])
    v = rand_vectors(10_000, seed=1)
    val = n.value(v)
    assert np.max(np.abs(n.value(v / val[:, None]) - 1.0)) <= 1e-12
    lam = np.random.default_rng(2).uniform(-5, 5, size=len(v))
    np.testing.assert_allclose(n.value(lam[:, None] * v), np.abs(lam) * val, rtol=1e-12)
    np.testing.assert_allclose(n.value(-v), val, rtol=1e-13)
    w = rand_vectors(10_000, seed=3)
    assert np.all(n.value(v + w) <= val + n.value(w) + 1e-12 * (val + n.value(w)))


@pytest.mark.parametrize("name", ALL)
def test_euler_identity(name):
    n = build_norm(SPECS[name])
    v = rand_vectors(500, seed=4)
    np.testing.assert_allclose(np.sum(n.gradient(v) * v, axis=1), n.value(v), rtol=1e-7)


@pytest.mark.parametrize("name", ALL)
def test_bipolar(name):
    n = build_norm(SPECS[name])
    v = rand_vectors(200, seed=5)
    np.testing.assert_allclose(n.dual.dual.value(v), n.value(v), rtol=1e-8)


def test_dual_values_closed_forms():
    assert dual_value(build_norm(SPECS["euclidean"]), np.array([0.0, 2.0])) == pytest.approx(2.0)
    assert dual_value(build_norm(SPECS["l43"]), np.array([1.0, 0.0])) == pytest.approx(1.0, abs=1e-14)
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    n = build_norm(SPECS["skew"])
    w = rand_vectors(50, seed=6)
    expected = np.sqrt(np.einsum("ni,ij,nj->n", w, np.linalg.inv(a), w))
    np.testing.assert_allclose(dual_value(n, w), expected, rtol=1e-12)


def test_dual_value_by_support_maximization():
    # brute force: sup of <p, x> over dense boundary samples
    n = build_norm(SPECS["interp"])
    ang = np.linspace(0, 2 * np.pi, 200_001)
    u = np.c_[np.cos(ang), np.sin(ang)]
    bd = u / n.value(u)[:, None]
    for p in rand_vectors(20, seed=7):
        assert dual_value(n, p) == pytest.approx(np.max(bd @ p), rel=1e-9)


def test_interpolated_dual_monotone_in_t():
    p = np.array([0.6, 0.8])
    vals = [dual_value(build_norm(NormSpec("interpolated", {"q": 4, "t": t})), p) for t in np.linspace(0, 0.95, 8)]
    # l^4 <= l^2 off the axes, so the mixture decreases with t
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("spec", [
    {"kind": "lp", "params": {"p": 1.0}},
    {"kind": "lp", "params": {"p": 0.5}},
    {"kind": "inner_product", "params": {"matrix": [[1, 2], [2, 1]]}},
    {"kind": "inner_product", "params": {"matrix": [[1, 0.1], [0, 1]]}},
    {"kind": "interpolated", "params": {"q": 2, "t": 0.5}},
    {"kind": "interpolated", "params": {"q": 4, "t": 1.0}},
    {"kind": "hfamily", "params": {"h": 2}},
    {"kind": "nonsense", "params": {}},
])
def test_rejects_bad_specs(spec):
    with pytest.raises(NormError):
        build_norm(spec)


def test_rejects_nonconvex_samples():
    pts = wobbly_samples()
    pts[10] *= 0.7
    with pytest.raises(NormError):
        GaugeSplineNorm(pts)


def test_samples_are_symmetrized():
    n = build_norm(SPECS["samples"])
    pts = wobbly_samples()
    np.testing.assert_allclose(n.value(pts), 1.0, atol=1e-12)
    np.testing.assert_allclose(n.value(-pts), 1.0, atol=1e-12)


def test_spec_json_round_trip():
    s = SPECS["interp"]
    assert NormSpec.from_json(s.to_json()) == s


def test_hfamily_arc():
    arc = hfamily_boundary(3)
    np.testing.assert_allclose(arc.point(0.0), [1.0, 0.0])
    assert arc.dg(0.0) == 0
    assert arc.g(1 / 3) == pytest.approx(7 / 18, abs=1e-15)
    for h in (3, 8, 32, 64):
        y = np.linspace(0, 1 / h, 50)
        assert np.all(hfamily_boundary(h).d2g(y) < 0)
        cert = hfamily_boundary(h).certify()
        assert cert["g_positive"] and cert["dg_nonpositive"] and cert["d2g_negative"]
    with pytest.raises(NormError):
        hfamily_boundary(2)


def test_hfamily_completion_contains_arc():
    n = build_norm(NormSpec("hfamily", {"h": 8}))
    arc = hfamily_boundary(8)
    y = np.linspace(0, 1 / 8, 9)
    np.testing.assert_allclose(n.dual.value(arc.point(y)), 1.0, atol=1e-10)


def test_strong_convexity():
    for name in ("euclidean", "skew", "interp", "samples"):
        assert is_strongly_convex(build_norm(SPECS[name]))
    # the l^4 sphere is flat to second order on the axes
    assert not is_strongly_convex(build_norm(SPECS["l4"]))
    assert strong_convexity_margin(build_norm(SPECS["euclidean"])) > 0.5
