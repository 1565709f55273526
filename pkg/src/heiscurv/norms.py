"""Planar norms: declarative specs, evaluators with gradients and Hessians,
duals, and the graph arcs used for the large-exponent family.

Vectors are arrays whose last axis has length 2.  Every evaluator is
vectorized over the leading axes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import monotone_solve

KINDS = ("euclidean", "inner_product", "lp", "interpolated", "hfamily", "boundary_samples")

TWO_PI = 2.0 * math.pi


class NormError(ValueError):
    """Raised for specs that do not describe a valid norm."""


def unit(alpha):
    alpha = np.asarray(alpha, dtype=float)
    return np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)


def cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def perp(a):
    return np.stack([-a[..., 1], a[..., 0]], axis=-1)


@dataclass(frozen=True)
class NormSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise NormError(f"unknown norm kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_dict(cls, data: dict) -> "NormSpec":
        if "kind" not in data:
            raise NormError("norm spec needs a 'kind' field")
        return cls(kind=data["kind"], params=dict(data.get("params", {})))

    @classmethod
    def from_json(cls, text: str) -> "NormSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def validate(self) -> None:
        p = self.params
        if self.kind == "inner_product":
            a = np.asarray(p.get("matrix"), dtype=float)
            if a.shape != (2, 2):
                raise NormError("inner_product needs a 2x2 'matrix'")
            if not np.allclose(a, a.T, rtol=0, atol=1e-12 * np.abs(a).max()):
                raise NormError("inner_product matrix must be symmetric")
            if np.linalg.eigvalsh(a).min() <= 0:
                raise NormError("inner_product matrix must be positive definite")
        elif self.kind == "lp":
            if float(p.get("p", 0)) <= 1:
                raise NormError("lp exponent must satisfy p > 1")
        elif self.kind == "interpolated":
            q, t = float(p.get("q", 0)), float(p.get("t", -1))
            if q <= 2:
                raise NormError("interpolated needs q > 2")
            if not 0 <= t < 1:
                raise NormError("interpolated needs t in [0, 1)")
        elif self.kind == "hfamily":
            h = p.get("h")
            if h is None or int(h) != h or h < 3:
                raise NormError("hfamily needs an integer h >= 3")
        elif self.kind == "boundary_samples":
            pts = np.asarray(p.get("points"), dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
                raise NormError("boundary_samples needs a list of [x, y] points")


class Norm2D:
    """Base evaluator.  Subclasses provide ``value`` and usually ``gradient``
    and ``hessian``; the fallbacks here use central differences."""

    spec: NormSpec | None = None
    fd_step = 1e-6

    def value(self, v):
        raise NotImplementedError

    def __call__(self, v):
        return self.value(v)

    def gradient(self, v):
        v = np.asarray(v, dtype=float)
        h = self.fd_step * np.maximum(1.0, np.linalg.norm(v, axis=-1))[..., None]
        e = np.eye(2)
        cols = [(self.value(v + h * e[i]) - self.value(v - h * e[i])) / (2 * h[..., 0]) for i in range(2)]
        return np.stack(cols, axis=-1)

    def hessian(self, v):
        v = np.asarray(v, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.linalg.norm(v, axis=-1))[..., None]
        e = np.eye(2)
        cols = [(self.gradient(v + h * e[i]) - self.gradient(v - h * e[i])) / (2 * h) for i in range(2)]
        hess = np.stack(cols, axis=-1)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    @property
    def dual(self) -> "Norm2D":
        d = getattr(self, "_dual", None)
        if d is None:
            d = DualNorm(self)
            d._dual = self
            self._dual = d
        return d

    def boundary_point(self, alpha):
        """Point of the unit sphere in Euclidean direction ``alpha``."""
        u = unit(alpha)
        return u / self.value(u)[..., None]

    def dual_value(self, p):
        return self.dual.value(p)


class InnerProductNorm(Norm2D):
    """``sqrt(v^T A v)`` for a symmetric positive-definite ``A``."""

    def __init__(self, matrix, spec=None):
        self.matrix = np.array(matrix, dtype=float)
        self.spec = spec or NormSpec("inner_product", {"matrix": self.matrix.tolist()})

    def value(self, v):
        v = np.asarray(v, dtype=float)
        return np.sqrt(np.einsum("...i,ij,...j->...", v, self.matrix, v))

    def gradient(self, v):
        v = np.asarray(v, dtype=float)
        return (v @ self.matrix) / self.value(v)[..., None]

    def hessian(self, v):
        v = np.asarray(v, dtype=float)
        n = self.value(v)[..., None, None]
        g = self.gradient(v)
        return (self.matrix - g[..., :, None] * g[..., None, :]) / n

    @property
    def dual(self):
        d = getattr(self, "_dual", None)
        if d is None:
            d = InnerProductNorm(np.linalg.inv(self.matrix))
            d._dual = self
            self._dual = d
        return d


class EuclideanNorm(InnerProductNorm):
    def __init__(self, spec=None):
        super().__init__(np.eye(2), spec or NormSpec("euclidean"))

    def value(self, v):
        return np.hypot(*np.moveaxis(np.asarray(v, dtype=float), -1, 0))

    @property
    def dual(self):
        return self


class LpNorm(Norm2D):
    def __init__(self, p: float, spec=None):
        if p <= 1:
            raise NormError("lp exponent must satisfy p > 1")
        self.p = float(p)
        self.spec = spec or NormSpec("lp", {"p": self.p})

    def value(self, v):
        a = np.abs(np.asarray(v, dtype=float))
        m = a.max(axis=-1)
        safe = np.where(m > 0, m, 1.0)
        r = a / safe[..., None]
        return m * np.sum(r**self.p, axis=-1) ** (1.0 / self.p)

    def gradient(self, v):
        v = np.asarray(v, dtype=float)
        n = self.value(v)[..., None]
        r = v / n
        return np.sign(r) * np.abs(r) ** (self.p - 1)

    def hessian(self, v):
        v = np.asarray(v, dtype=float)
        p = self.p
        n = self.value(v)[..., None]
        r = np.abs(v / n)
        g = self.gradient(v)
        diag = np.zeros(v.shape + (2,))
        with np.errstate(divide="ignore"):
            d = r ** (p - 2)
        diag[..., 0, 0] = d[..., 0]
        diag[..., 1, 1] = d[..., 1]
        return (p - 1) * (diag - g[..., :, None] * g[..., None, :]) / n[..., None]

    @property
    def dual(self):
        d = getattr(self, "_dual", None)
        if d is None:
            d = LpNorm(self.p / (self.p - 1))
            d._dual = self
            self._dual = d
        return d


class MixtureNorm(Norm2D):
    """Positive combination ``sum_i w_i N_i`` of norms."""

    def __init__(self, weights, norms, spec=None):
        self.weights = [float(w) for w in weights]
        self.norms = list(norms)
        keep = [(w, n) for w, n in zip(self.weights, self.norms) if w != 0]
        self._terms = keep
        self.spec = spec

    def value(self, v):
        return sum(w * n.value(v) for w, n in self._terms)

    def gradient(self, v):
        return sum(w * n.gradient(v) for w, n in self._terms)

    def hessian(self, v):
        return sum(w * n.hessian(v) for w, n in self._terms)


class DualNorm(Norm2D):
    """Dual of a C^1 strictly convex norm by support maximization.

    For a covector ``v`` the maximizer of ``<p, v>`` over the unit ball of the
    primal is the boundary point whose outer normal points along ``v``; it is
    found by inverting the (monotone) normal-angle map of the primal sphere.
    The maximizer is also the gradient of the dual norm, and the Hessian
    follows from the inverse relation between the gradients of the squared
    norms.
    """

    def __init__(self, primal: Norm2D, resolution: int = 2048, spec=None):
        self.primal = primal
        self.spec = spec
        self._dual = primal
        self._alpha = np.linspace(0.0, TWO_PI, resolution + 1)
        nu = np.unwrap(np.arctan2(*np.moveaxis(primal.gradient(unit(self._alpha)), -1, 0)[::-1]))
        if np.any(np.diff(nu) < -1e-12):
            raise NormError("normal map of the primal sphere is not monotone (not convex?)")
        self._nu = np.maximum.accumulate(nu)
        self.residual = 0.0

    def _normal_angle(self, alpha):
        u = unit(alpha)
        g = self.primal.gradient(u)
        hg = np.einsum("...ij,...j->...i", self.primal.hessian(u), perp(u))
        nu = np.arctan2(g[..., 1], g[..., 0])
        dnu = cross(g, hg) / np.sum(g * g, axis=-1)
        return nu, dnu

    def support_direction(self, v):
        """Euclidean angle of the primal boundary point exposed by ``v``."""
        v = np.asarray(v, dtype=float)
        gamma = np.arctan2(v[..., 1], v[..., 0])
        nu0 = self._nu[0]
        gamma = nu0 + np.mod(gamma - nu0, TWO_PI)
        k = np.clip(np.searchsorted(self._nu, gamma) - 1, 0, len(self._alpha) - 2)
        lo, hi = self._alpha[k], self._alpha[k + 1]
        x0 = np.interp(gamma, self._nu, self._alpha)

        def f(a):
            nu, dnu = self._normal_angle(a)
            # keep the branch consistent with the unwrapped table
            ref = np.interp(a, self._alpha, self._nu)
            nu = nu + TWO_PI * np.round((ref - nu) / TWO_PI)
            return nu, dnu

        alpha = monotone_solve(f, gamma, lo, hi, x0)
        nu, _ = f(alpha)
        self.residual = float(np.max(np.abs(nu - gamma), initial=0.0))
        return alpha

    def _maximizer(self, v):
        alpha = self.support_direction(v)
        return self.primal.boundary_point(alpha)

    def value(self, v):
        v = np.asarray(v, dtype=float)
        zero = ~np.any(v != 0, axis=-1)
        vv = np.where(zero[..., None], 1.0, v)
        val = np.sum(self._maximizer(vv) * vv, axis=-1)
        return np.where(zero, 0.0, val)

    def gradient(self, v):
        return self._maximizer(np.asarray(v, dtype=float))

    def hessian(self, v):
        v = np.asarray(v, dtype=float)
        p = self._maximizer(v)
        n = np.sum(p * v, axis=-1)
        w = n[..., None] * p
        gf = self.primal.gradient(w)
        hf = self.primal.hessian(w)
        fw = self.primal.value(w)
        hsq = gf[..., :, None] * gf[..., None, :] + fw[..., None, None] * hf
        hsq_dual = np.linalg.inv(hsq)
        return (hsq_dual - p[..., :, None] * p[..., None, :]) / n[..., None, None]


class GaugeSplineNorm(Norm2D):
    """Norm whose gauge along unit directions, ``G(alpha) = ||u(alpha)||``,
    is a periodic cubic spline through sampled boundary points.

    ``||v|| = |v| G(arg v)``; convexity of the sphere is ``G + G'' > 0``.
    """

    def __init__(self, points, spec=None, eps_sc=1e-8):
        pts = np.asarray(points, dtype=float)
        pts = np.concatenate([pts, -pts])
        ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
        order = np.argsort(ang)
        ang, pts = ang[order], pts[order]
        keep = np.concatenate([[True], np.diff(ang) > 1e-12])
        ang, pts = ang[keep], pts[keep]
        if len(pts) < 6:
            raise NormError("need at least three distinct boundary samples per half")
        nxt = np.roll(pts, -1, axis=0)
        edges = nxt - pts
        turns = cross(edges, np.roll(edges, -1, axis=0))
        if np.any(turns <= 0) or np.any(cross(pts, nxt) <= 0):
            raise NormError("boundary samples do not form a strictly convex polyline around the origin")
        gauge = 1.0 / np.linalg.norm(pts, axis=1)
        self._spline = CubicSpline(np.append(ang, ang[0] + TWO_PI), np.append(gauge, gauge[0]), bc_type="periodic")
        self.spec = spec or NormSpec("boundary_samples", {"points": np.asarray(points).tolist()})
        grid = np.linspace(0, TWO_PI, 16 * len(ang), endpoint=False)
        self.min_curvature_margin = float(np.min(self._spline(grid) + self._spline(grid, 2)))
        if self.min_curvature_margin <= eps_sc:
            raise NormError("spline through boundary samples is not strongly convex")

    def _polar(self, v):
        v = np.asarray(v, dtype=float)
        rho = np.linalg.norm(v, axis=-1)
        a = np.mod(np.arctan2(v[..., 1], v[..., 0]), TWO_PI)
        return rho, a

    def value(self, v):
        rho, a = self._polar(v)
        return rho * self._spline(a)

    def gradient(self, v):
        _, a = self._polar(v)
        er = unit(a)
        return self._spline(a)[..., None] * er + self._spline(a, 1)[..., None] * perp(er)

    def hessian(self, v):
        rho, a = self._polar(v)
        ea = perp(unit(a))
        c = (self._spline(a) + self._spline(a, 2)) / rho
        return c[..., None, None] * ea[..., :, None] * ea[..., None, :]


@dataclass(frozen=True)
class GraphArc:
    """Arc ``{(g(y), y) : 0 <= y <= y_max}`` of a unit sphere, with ``g(0) = 1``
    and ``g'(0) = 0``.  ``integral(y)`` is the antiderivative of ``g`` from 0."""

    g: Callable
    dg: Callable
    d2g: Callable
    integral: Callable
    y_max: float
    label: str = ""

    def point(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([self.g(y), y], axis=-1)

    def certify(self, n: int = 50) -> dict[str, Any]:
        y = np.linspace(0.0, self.y_max, n)
        g, dg, d2g = self.g(y), self.dg(y), self.d2g(y)
        return {
            "g_positive": bool(np.all(g > 0)),
            "dg_nonpositive": bool(np.all(dg <= 0)),
            "d2g_negative": bool(np.all(d2g < 0)),
            "min_g": float(g.min()),
            "max_d2g": float(d2g.max()),
        }


def hfamily_boundary(h: int) -> GraphArc:
    """Arc of ``g(y) = 1 - y^2 - (h^h / 2) y^h`` on ``[0, 1/h]``."""
    if int(h) != h or h < 3:
        raise NormError("hfamily needs an integer h >= 3")
    h = int(h)
    # h^h y^h overflows for large h; evaluate as (h y)^h
    def g(y):
        y = np.asarray(y, dtype=float)
        return 1.0 - y**2 - 0.5 * (h * y) ** h

    def dg(y):
        y = np.asarray(y, dtype=float)
        return -2.0 * y - 0.5 * h * h * (h * y) ** (h - 1)

    def d2g(y):
        y = np.asarray(y, dtype=float)
        return -2.0 - 0.5 * h**3 * (h - 1) * (h * y) ** (h - 2)

    def integral(y):
        y = np.asarray(y, dtype=float)
        return y - y**3 / 3.0 - 0.5 * y * (h * y) ** h / (h + 1)

    arc = GraphArc(g, dg, d2g, integral, 1.0 / h, label=f"h={h}")
    cert = arc.certify()
    if not (cert["g_positive"] and cert["dg_nonpositive"] and cert["d2g_negative"]):
        raise NormError(f"h-family arc failed its sign certificate: {cert}")
    return arc


def disc_arc(y_max: float = 0.5) -> GraphArc:
    """Arc of the Euclidean unit circle near (1, 0)."""
    return GraphArc(
        g=lambda y: np.sqrt(1.0 - np.asarray(y, dtype=float) ** 2),
        dg=lambda y: -np.asarray(y) / np.sqrt(1.0 - np.asarray(y, dtype=float) ** 2),
        d2g=lambda y: -1.0 / (1.0 - np.asarray(y, dtype=float) ** 2) ** 1.5,
        integral=lambda y: 0.5 * (np.asarray(y) * np.sqrt(1 - np.asarray(y, dtype=float) ** 2) + np.arcsin(y)),
        y_max=y_max,
        label="disc",
    )


def _hfamily_completion(h: int, n: int = 2000) -> Norm2D:
    # Optional global closure of the h-family arc for cross-validation only:
    # the arc and its mirror images, joined over the top by a half-ellipse
    # through the arc end point, smoothed by the gauge spline.
    arc = hfamily_boundary(h)
    y = np.linspace(0.0, arc.y_max, n // 4)
    right = arc.point(y)
    x_end, y_end = right[-1]
    # axis-aligned ellipse through the end point with the same tangent there
    dg = float(arc.dg(arc.y_max))
    d = x_end - y_end * dg
    a = math.sqrt(x_end * d)
    b = math.sqrt(y_end * d / -dg)
    s = np.linspace(math.asin(y_end / b), math.pi / 2, n // 4)[1:]
    top = np.stack([a * np.cos(s), b * np.sin(s)], axis=1)
    upper = np.concatenate([right, top])
    mirror = upper[::-1][1:] * np.array([-1.0, 1.0])
    dual_pts = np.concatenate([upper, mirror])
    dual = GaugeSplineNorm(dual_pts[dual_pts[:, 1] >= 0], spec=NormSpec("hfamily", {"h": h}))
    return dual.dual


def build_norm(spec: NormSpec | dict) -> Norm2D:
    """Evaluator for a declarative spec.

    ``interpolated`` returns the dual of ``t l^q + (1 - t) l^2``; its ``dual``
    is that mixture in closed form.
    """
    if isinstance(spec, dict):
        spec = NormSpec.from_dict(spec)
    spec.validate()
    p = spec.params
    if spec.kind == "euclidean":
        return EuclideanNorm(spec)
    if spec.kind == "inner_product":
        return InnerProductNorm(p["matrix"], spec)
    if spec.kind == "lp":
        return LpNorm(float(p["p"]), spec)
    if spec.kind == "interpolated":
        q, t = float(p["q"]), float(p["t"])
        mixture = MixtureNorm([t, 1.0 - t], [LpNorm(q), EuclideanNorm()])
        norm = DualNorm(mixture, spec=spec)
        mixture._dual = norm
        return norm
    if spec.kind == "boundary_samples":
        return GaugeSplineNorm(p["points"], spec)
    if spec.kind == "hfamily":
        norm = _hfamily_completion(int(p["h"]))
        norm.spec = spec
        return norm
    raise NormError(f"unsupported kind {spec.kind}")


def dual_value(norm: Norm2D, p):
    """Dual norm of covector(s) ``p``: the support function of the unit ball."""
    return norm.dual.value(p)


def strong_convexity_margin(norm: Norm2D, n: int = 720, step: float = 1e-4) -> float:
    """Smallest second difference of ``||.||^2 / 2`` along the unit sphere,
    taken in the Euclidean unit tangent direction."""
    alpha = np.linspace(0.0, TWO_PI, n, endpoint=False)
    b = norm.boundary_point(alpha)
    g = norm.gradient(b)
    t = perp(g)
    t /= np.linalg.norm(t, axis=-1, keepdims=True)
    f = lambda v: 0.5 * norm.value(v) ** 2
    d2 = (f(b + step * t) - 2 * f(b) + f(b - step * t)) / step**2
    return float(d2.min())


def is_strongly_convex(norm: Norm2D, eps_sc: float = 1e-8) -> bool:
    return strong_convexity_margin(norm) > eps_sc
