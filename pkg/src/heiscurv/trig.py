"""Generalized trigonometry of a planar norm and of its polar.

Everything is parametrized by the Euclidean direction ``alpha`` of a point on
the dual sphere.  For ``u = (cos alpha, sin alpha)``

    Q(alpha) = u / N*(u)          point of the dual sphere
    P(alpha) = grad N*(u)         the primal point paired with Q
    phi'(alpha)   = |Q|^2         (twice the swept sector area of the dual ball)
    theta'(alpha) = P x H*(u) u_perp

so the dual angle, the primal angle and the correspondence ``theta = C(phi)``
all come from one monotone parameter.  Node values of the two angle maps are
accumulated with per-cell Gauss-Legendre sums, and every evaluation between
nodes integrates the partial cell the same way, so the maps are exact to
rounding rather than to interpolation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .norms import LpNorm, Norm2D, cross, perp, unit
from .quadrature import gauss_legendre, monotone_solve

TWO_PI = 2.0 * math.pi
GL_CELL = 8


class TrigError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundaryCurve:
    """Sphere samples with the generalized angle (twice the sector area)
    accumulated from the positive x-axis."""

    samples: np.ndarray
    cumulative_area: np.ndarray

    def enclosed_area(self) -> float:
        return 0.5 * float(self.cumulative_area[-1] - self.cumulative_area[0])


@dataclass(frozen=True)
class DualState:
    """Everything the geometry needs at dual angles ``phi``."""

    phi: np.ndarray
    Q: np.ndarray        # (cos_polar, sin_polar)(phi)
    P: np.ndarray        # (cos, sin)(C(phi))
    cprime: np.ndarray   # C'(phi)


def _default_cluster(dual: Norm2D) -> float:
    # grad of an lp ball with p < 2 behaves like |alpha|^(p-1) at the axes;
    # substituting alpha ~ beta^k with k = 1/(p-1) makes it smooth again
    if isinstance(dual, LpNorm) and dual.p < 2:
        return 1.0 / (dual.p - 1.0)
    return 1.0


class TrigTable:
    def __init__(self, norm: Norm2D, resolution: int = 4096, cluster: float | None = None):
        if resolution < 64:
            raise ValueError("resolution must be at least 64")
        self.norm = norm
        self.dual = norm.dual
        self.resolution = int(resolution)
        self.cluster = float(cluster) if cluster is not None else _default_cluster(self.dual)

        m = self.resolution
        self.beta = np.linspace(0.0, TWO_PI, m + 1)
        xg, wg = gauss_legendre(GL_CELL)
        h = TWO_PI / m
        nodes = (self.beta[:-1, None] + h * xg[None, :]).ravel()
        dphi, dtheta = self._rates(nodes)
        cell_phi = h * (dphi.reshape(m, GL_CELL) @ wg)
        cell_theta = h * (dtheta.reshape(m, GL_CELL) @ wg)
        if np.any(~np.isfinite(cell_theta)) or np.any(cell_theta < 0) or np.any(cell_phi <= 0):
            raise TrigError("angle maps are not monotone: the norm is not convex and C^1")
        self._phi_nodes = np.concatenate([[0.0], np.cumsum(cell_phi)])
        theta_raw = np.concatenate([[0.0], np.cumsum(cell_theta)])
        self.pi_polar = 0.5 * float(self._phi_nodes[-1])
        self.pi_omega = 0.5 * float(theta_raw[-1])
        # theta = 0 sits at the point of the primal sphere on the positive x-axis
        self._theta_nodes = theta_raw
        shift = self._theta_raw(np.array([self._primal_axis_beta()]))[0]
        # take the sheet with C(0) in (-pi_omega, pi_omega], so that the
        # correspondences of a norm and of its dual are inverse to each other
        shift += 2 * self.pi_omega * math.floor(0.5 - shift / (2 * self.pi_omega))
        self._theta_nodes = theta_raw - shift

    # parametrization -------------------------------------------------
    def _dir(self, beta):
        """``unit(alpha(beta))`` without rounding ``alpha`` first: near the end
        of a quadrant ``alpha`` sits within an ulp of a multiple of pi/2 and
        the small component of the direction would be lost."""
        beta = np.asarray(beta, dtype=float)
        k = self.cluster
        if k == 1.0:
            return unit(beta)
        quarter = math.pi / 2
        q = np.floor(beta / quarter)
        b = beta - q * quarter
        c, s = np.cos(b) ** k, np.sin(b) ** k
        m = np.hypot(c, s)
        c, s = c / m, s / m
        q = np.mod(q, 4).astype(int)
        # exact quarter turns
        x = np.choose(q, [c, -s, -c, s])
        y = np.choose(q, [s, c, -s, -c])
        return np.stack([x, y], axis=-1)

    def _dalpha(self, beta):
        beta = np.asarray(beta, dtype=float)
        k = self.cluster
        if k == 1.0:
            return np.ones_like(beta)
        quarter = math.pi / 2
        b = beta - np.floor(beta / quarter) * quarter
        s, c = np.sin(b), np.cos(b)
        return k * (s * c) ** (k - 1) / (s ** (2 * k) + c ** (2 * k))

    def _rates(self, beta):
        """d(phi)/d(beta) and d(theta)/d(beta)."""
        return self._phi_rate(beta), self._theta_rate(beta)

    def _phi_rate(self, beta):
        u = self._dir(beta)
        return self._dalpha(beta) / self.dual.value(u) ** 2

    def _theta_rate(self, beta):
        da = self._dalpha(beta)
        u = self._dir(beta)
        p = self.dual.gradient(u)
        with np.errstate(invalid="ignore", divide="ignore"):
            dp = np.einsum("...ij,...j->...i", self.dual.hessian(u), perp(u))
            dtheta = cross(p, dp) * da
        return np.where(da == 0, 0.0, dtheta)

    def _cell_integral(self, beta, which):
        beta = np.asarray(beta, dtype=float)
        m = self.resolution
        h = TWO_PI / m
        j = np.clip(np.floor(beta / h).astype(int), 0, m - 1)
        lo = self.beta[j]
        xg, wg = gauss_legendre(GL_CELL)
        span = beta - lo
        pts = lo[..., None] + span[..., None] * xg
        rate = (self._phi_rate if which == 0 else self._theta_rate)(pts)
        nodes = self._phi_nodes if which == 0 else self._theta_nodes
        return nodes[j] + span * (rate @ wg)

    def _phi_of_beta(self, beta):
        return self._cell_integral(beta, 0)

    def _theta_raw(self, beta):
        return self._cell_integral(beta, 1)

    def _primal_axis_beta(self) -> float:
        p = self.dual.gradient(self._dir(self.beta))
        ang = np.arctan2(p[:, 1], p[:, 0])
        # crossing of the primal direction through angle 0 (from below, with x > 0)
        idx = np.flatnonzero((ang[:-1] <= 0) & (ang[1:] > 0) & (p[:-1, 0] > 0))
        if len(idx) == 0:
            if abs(ang[0]) < 1e-15:
                return 0.0
            raise TrigError("primal sphere never crosses the positive x-axis")
        j = idx[0]
        if ang[j] == 0:
            return float(self.beta[j])
        f = lambda b: float(self.dual.gradient(self._dir(np.array(b)))[1])
        return brentq(f, self.beta[j], self.beta[j + 1], xtol=1e-16, rtol=1e-15)

    # inversion -------------------------------------------------------
    def _invert(self, values, nodes, which):
        values = np.asarray(values, dtype=float)
        base, period = nodes[0], nodes[-1] - nodes[0]
        turns = np.floor((values - base) / period)
        red = values - turns * period
        j = np.clip(np.searchsorted(nodes, red, side="right") - 1, 0, self.resolution - 1)
        lo, hi = self.beta[j], self.beta[j + 1]
        span = nodes[j + 1] - nodes[j]
        frac = np.where(span > 0, (red - nodes[j]) / np.where(span > 0, span, 1.0), 0.5)
        x0 = lo + frac * (hi - lo)

        def f(b):
            rate = self._phi_rate if which == 0 else self._theta_rate
            return self._cell_integral(b, which), rate(b)

        beta = monotone_solve(f, red, lo, hi, x0)
        return beta, turns

    def beta_of_phi(self, phi):
        return self._invert(phi, self._phi_nodes, 0)

    def beta_of_theta(self, theta):
        return self._invert(theta, self._theta_nodes, 1)

    # evaluation ------------------------------------------------------
    def dual_point(self, phi):
        beta, _ = self.beta_of_phi(phi)
        u = self._dir(beta)
        return u / self.dual.value(u)[..., None]

    def primal_point(self, theta):
        beta, _ = self.beta_of_theta(theta)
        return self.dual.gradient(self._dir(beta))

    def state(self, phi) -> DualState:
        phi = np.asarray(phi, dtype=float)
        beta, _ = self.beta_of_phi(phi)
        u = self._dir(beta)
        nstar = self.dual.value(u)
        q = u / nstar[..., None]
        p = self.dual.gradient(u)
        with np.errstate(invalid="ignore", divide="ignore"):
            dp = np.einsum("...ij,...j->...i", self.dual.hessian(u), perp(u))
            cp = cross(p, dp) * nstar**2
        return DualState(phi, q, p, cp)

    def ccirc(self, phi):
        beta, turns = self.beta_of_phi(phi)
        return self._theta_raw(beta) + turns * 2.0 * self.pi_omega

    def ccirc_inverse(self, theta):
        beta, turns = self.beta_of_theta(theta)
        return self._phi_of_beta(beta) + turns * 2.0 * self.pi_polar

    def ccirc_prime(self, phi):
        return self.state(phi).cprime

    # sampled views ---------------------------------------------------
    @cached_property
    def theta_grid(self) -> np.ndarray:
        return 2.0 * self.pi_omega * np.arange(self.resolution) / self.resolution

    @cached_property
    def phi_grid(self) -> np.ndarray:
        return 2.0 * self.pi_polar * np.arange(self.resolution) / self.resolution

    @cached_property
    def points(self) -> np.ndarray:
        return self.primal_point(self.theta_grid)

    @cached_property
    def dual_points(self) -> np.ndarray:
        return self.dual_point(self.phi_grid)

    @cached_property
    def ccirc_samples(self) -> np.ndarray:
        return self.ccirc(self.phi_grid)

    @cached_property
    def ccirc_prime_samples(self) -> np.ndarray:
        return self.ccirc_prime(self.phi_grid)

    @cached_property
    def dual_table(self) -> "TrigTable":
        return TrigTable(self.dual, self.resolution)

    def boundary_curve(self) -> BoundaryCurve:
        return BoundaryCurve(self.dual.gradient(self._dir(self.beta)), self._theta_nodes.copy())

    def dual_boundary_curve(self) -> BoundaryCurve:
        u = self._dir(self.beta)
        return BoundaryCurve(u / self.dual.value(u)[..., None], self._phi_nodes.copy())


def trig_table(norm: Norm2D, resolution: int = 4096) -> TrigTable:
    return TrigTable(norm, resolution)


def cos_sin(table: TrigTable, theta):
    """``(cos_Omega(theta), sin_Omega(theta))``, periodic in ``2 pi_Omega``."""
    return table.primal_point(theta)


def cos_sin_polar(table: TrigTable, phi):
    return table.dual_point(phi)


def correspondence_by_pythagoras(table: TrigTable, phi: float, step: float = 1e-5) -> float:
    """``C(phi)`` as the maximizer of ``<P_theta, Q_phi>``, found by bracketing
    the zero of its centred difference in ``theta``.  Independent of the
    gradient of the dual norm; used to cross-check the primary route."""
    q = table.dual_point(np.array([phi]))[0]
    pts = table.dual.gradient(table._dir(table.beta[:-1]))
    thetas = table._theta_nodes[:-1]
    j = int(np.argmax(pts @ q))
    m = table.resolution

    def slope(theta):
        pp = table.primal_point(np.array([theta + step, theta - step]))
        return float((pp[0] - pp[1]) @ q) / (2 * step)

    lo = thetas[(j - 1) % m] - (2 * table.pi_omega if j == 0 else 0.0)
    hi = thetas[(j + 1) % m] + (2 * table.pi_omega if j == m - 1 else 0.0)
    theta = brentq(slope, lo, hi, xtol=1e-13)
    # express in the same sheet as the primary route
    turns = math.floor((phi - table._phi_nodes[0]) / (2 * table.pi_polar))
    return theta + turns * 2 * table.pi_omega


def correspondence(table: TrigTable, phi, verify: bool = False, tol: float = 1e-7):
    """``C(phi)``: primal angle of the gradient of the dual norm at ``Q_phi``.

    With ``verify`` the value is re-derived from the Pythagorean equality and
    a ``TrigError`` is raised if the two routes differ by more than ``tol``
    (divided by ``max(1, C')``, i.e. measured in the dual angle where the
    correspondence is steep).
    """
    theta = table.ccirc(phi)
    if verify:
        flat = np.atleast_1d(np.asarray(phi, dtype=float))
        ref = np.array([correspondence_by_pythagoras(table, p) for p in flat])
        # where C' is large the primal sphere is nearly flat and theta is
        # ill-conditioned; measure the gap in the dual angle there
        scale = np.maximum(1.0, table.ccirc_prime(flat))
        err = np.max(np.abs(ref - np.atleast_1d(theta)) / scale)
        if err > tol:
            raise TrigError(f"correspondence routes disagree by {err:.3e}")
    return theta


def correspondence_derivative(table: TrigTable, phi):
    """``C'(phi)`` from the curvature of the dual sphere (closed form in the
    dual Hessian)."""
    return table.ccirc_prime(phi)


def correspondence_derivative_fd(table: TrigTable, phi):
    """One-cell centred difference of ``C``."""
    h = 2.0 * table.pi_polar / table.resolution
    phi = np.asarray(phi, dtype=float)
    return (table.ccirc(phi + h) - table.ccirc(phi - h)) / (2 * h)


def second_difference(table: TrigTable, phi, omega):
    phi = np.asarray(phi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(omega == 0):
        raise ValueError("omega must be nonzero")
    c0 = table.ccirc(phi)
    c1 = table.ccirc(phi + omega)
    c2 = table.ccirc(phi + 2 * omega)
    return (c2 - 2 * c1 + c0) / omega**2


@dataclass(frozen=True)
class AffineFit:
    affine: bool
    slope: float
    intercept: float
    max_residual: float
    ode_residual: float

    def __bool__(self):
        return self.affine


def affine_check(table: TrigTable, tol: float = 1e-8) -> AffineFit:
    """Least-squares line through the sampled ``C``; also reports the largest
    residual of ``cos_polar'' + C' cos_polar = 0`` with the second derivative
    taken by one-cell differences."""
    phi = table.phi_grid
    c = table.ccirc_samples
    slope, intercept = np.polyfit(phi, c, 1)
    resid = float(np.max(np.abs(c - (slope * phi + intercept))))
    h = phi[1] - phi[0]
    q = table.dual_points
    qp = table.dual_point(phi + h)
    qm = table.dual_point(phi - h)
    d2 = (qp - 2 * q + qm) / h**2
    cp = table.ccirc_prime_samples
    ok = np.isfinite(cp)  # C' is infinite where the primal sphere is flat
    ode = float(np.max(np.abs(d2[ok] + cp[ok, None] * q[ok])))
    return AffineFit(resid <= tol, float(slope), float(intercept), resid, ode)
