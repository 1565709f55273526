"""Heisenberg group law, exponential map and Jacobians of the sub-Finsler
Heisenberg group built on a trig table.

Notation: ``Q(phi)`` is the dual trig point, ``P(phi)`` the primal point paired
with it (``(cos, sin)(C(phi))``) and ``c(phi) = C'(phi)``.  The two identities
``dQ/dphi = P_perp`` and ``dP/dphi = c Q_perp`` give the derivative formulas
and the cancellation-free small-angle forms used below ``PSI_STABLE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root

from .norms import cross
from .quadrature import gauss_legendre
from .trig import TrigTable

# below this |psi| the closed forms lose digits to cancellation (relative
# error ~ 1e-16 / psi^4 for the reduced Jacobian); integral forms take over
PSI_STABLE = 0.02
GL_SMALL = 8


@dataclass(frozen=True)
class HeisPoint:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def inverse(self) -> "HeisPoint":
        return HeisPoint(-self.x, -self.y, -self.z)

    def __mul__(self, other: "HeisPoint") -> "HeisPoint":
        return group_mul(self, other)


@dataclass(frozen=True)
class GeodesicParams:
    r: float
    phi: float
    omega: float

    def validate(self, table: TrigTable | None = None) -> None:
        if not self.r > 0:
            raise ValueError("r must be positive")
        if table is not None and abs(self.omega) >= 2 * table.pi_polar:
            raise ValueError("|omega| must be below 2 pi_polar")


def group_mul(p: HeisPoint, q: HeisPoint) -> HeisPoint:
    return HeisPoint(p.x + q.x, p.y + q.y, p.z + q.z + 0.5 * (p.x * q.y - q.x * p.y))


def _dot(a, b):
    return np.sum(a * b, axis=-1)


# exponential map ---------------------------------------------------------

def exp_coords(table: TrigTable, r, phi, omega, t=1.0):
    """Vectorized endpoint ``G_t(r, phi, omega)`` as arrays ``(x, y, z)``."""
    r, phi, omega, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, phi, omega, t)))
    psi = omega * t
    x = np.empty(psi.shape)
    y = np.empty(psi.shape)
    z = np.empty(psi.shape)
    s0 = table.state(phi)
    big = np.abs(psi) >= PSI_STABLE
    if big.any():
        q1 = table.dual_point(phi[big] + psi[big])
        q0 = s0.Q[big]
        k = r[big] / omega[big]
        x[big] = k * (q1[:, 1] - q0[:, 1])
        y[big] = -k * (q1[:, 0] - q0[:, 0])
        z[big] = 0.5 * k**2 * (psi[big] - cross(q0, q1))
    small = ~big
    if small.any():
        xi, wi = gauss_legendre(GL_SMALL)
        ph, ps = phi[small], psi[small]
        st = table.state(ph[:, None] + ps[:, None] * xi)
        q0 = s0.Q[small]
        g = cross(q0[:, None, :], st.Q)
        rt = r[small] * t[small]
        mean_p = np.einsum("j,njk->nk", wi, st.P)
        x[small] = rt * mean_p[:, 0]
        y[small] = rt * mean_p[:, 1]
        # psi - Q0 x Q_psi = psi^2 * int_0^1 (1 - xi) c G dxi
        z[small] = 0.5 * rt**2 * ((wi * (1 - xi)) * st.cprime * g).sum(axis=1)
    return x, y, z


def exp_map(table: TrigTable, params: GeodesicParams, t: float = 1.0) -> HeisPoint:
    x, y, z = exp_coords(table, params.r, params.phi, params.omega, t)
    return HeisPoint(float(x), float(y), float(z))


def geodesic_trace(table: TrigTable, params: GeodesicParams, k: int) -> list[HeisPoint]:
    if k < 2:
        raise ValueError("k must be at least 2")
    ts = np.linspace(0.0, 1.0, k)
    x, y, z = exp_coords(table, params.r, params.phi, params.omega, ts)
    return [HeisPoint(float(a), float(b), float(c)) for a, b, c in zip(x, y, z)]


# reduced Jacobian --------------------------------------------------------

def _small_psi_parts(table: TrigTable, phi, psi, with_value=True):
    """``d_psi J_R`` and (optionally) ``J_R`` for small ``|psi|`` through

        D(v)       = v int_0^v F - int_0^v (v - w) c(phi + w) G(w) dw
        d_psi J_R  = c(phi + psi) D(psi)
        J_R        = int_0^psi c(phi + v) D(v) dv

    with ``F(w) = P0 x P_w`` and ``G(w) = Q0 x Q_w``.
    """
    xi, wi = gauss_legendre(GL_SMALL)
    s0 = table.state(phi)
    p0, q0 = s0.P[:, None, :], s0.Q[:, None, :]

    def d_of(v):
        # v has shape (n, m); inner nodes w = v * xi
        w = v[..., None] * xi
        st = table.state(phi[:, None, None] + w)
        f = cross(p0[:, :, None, :], st.P)
        g = cross(q0[:, :, None, :], st.Q)
        int_f = v * (f @ wi)
        int_g = v * (((v[..., None] - w) * st.cprime * g) @ wi)
        return v * int_f - int_g

    d_end = d_of(psi[:, None])[:, 0]
    dj = table.state(phi + psi).cprime * d_end
    if not with_value:
        return None, dj
    v = psi[:, None] * xi
    cv = table.state(phi[:, None] + v).cprime
    j = psi * ((cv * d_of(v)) @ wi)
    return j, dj


def _direct_parts(table: TrigTable, phi, psi):
    s0 = table.state(phi)
    s1 = table.state(phi + psi)
    j = 2.0 - _dot(s1.Q, s0.P) - _dot(s1.P, s0.Q) - psi * cross(s0.P, s1.P)
    dj = s1.cprime * (cross(s0.Q, s1.Q) - psi * _dot(s0.P, s1.Q))
    return j, dj


def jacobian_parts(table: TrigTable, phi, psi):
    """``(J_R, d_psi J_R)`` at arrays of ``(phi, psi)``; both vanish at psi = 0."""
    phi, psi = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(psi, dtype=float))
    shape = phi.shape
    phi, psi = phi.ravel(), psi.ravel()
    j = np.zeros(phi.shape)
    dj = np.zeros(phi.shape)
    big = np.abs(psi) >= PSI_STABLE
    if big.any():
        j[big], dj[big] = _direct_parts(table, phi[big], psi[big])
    small = ~big & (psi != 0)
    if small.any():
        j[small], dj[small] = _small_psi_parts(table, phi[small], psi[small])
    return j.reshape(shape), dj.reshape(shape)


def reduced_jacobian(table: TrigTable, phi, psi):
    j, _ = jacobian_parts(table, phi, psi)
    return j if np.ndim(j) else float(j)


def reduced_jacobian_direct(table: TrigTable, phi, psi):
    """The closed form evaluated literally, at every ``psi``."""
    phi, psi = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(psi, dtype=float))
    j, _ = _direct_parts(table, phi.ravel(), psi.ravel())
    return j.reshape(phi.shape)


def reduced_jacobian_domega(table: TrigTable, phi, psi):
    """``d/dpsi J_R = C'(phi+psi) [Q(phi) x Q(phi+psi) - psi <P(phi), Q(phi+psi)>]``."""
    _, dj = jacobian_parts(table, phi, psi)
    return dj if np.ndim(dj) else float(dj)


def jacobian(table: TrigTable, params: GeodesicParams, t: float):
    """Jacobian determinant ``(r^3 t / omega^4) J_R(phi, omega t)`` of ``G_t``."""
    r, phi, omega = params.r, params.phi, params.omega
    if omega == 0:
        c = float(table.ccirc_prime(np.array([phi]))[0])
        return r**3 * t**5 * c**2 / 12.0
    return r**3 * t / omega**4 * reduced_jacobian(table, phi, omega * t)


# P + R decomposition -----------------------------------------------------

@dataclass(frozen=True)
class PRDecomposition:
    P: float
    R: float
    J: float
    R_direct: float | None = None
    quad_error: float = 0.0


def _moment_form(table: TrigTable, phi: float, omega: float, n: int) -> float:
    x, w = gauss_legendre(n)
    t = omega * x
    c = table.state(phi + t).cprime
    m0 = omega * (w @ c)
    tbar = omega * (w @ (t * c)) / m0
    return m0 * omega * (w @ ((t - tbar) ** 2 * c))


def p_term(table: TrigTable, phi: float, omega: float, n: int = 32, tol: float = 1e-12):
    """``P = (1/2) int int (t - s)^2 c(t) c(s)``, written as ``m0 * int (t - tbar)^2 c``.

    Tensor Gauss-Legendre, with one split of the interval when the full rule
    and the split rule disagree by more than ``tol`` (relative)."""
    whole = _moment_form(table, phi, omega, n)
    x, w = gauss_legendre(n)
    # the split rule, done on the 2n nodes of the two halves
    t = omega * np.concatenate([0.5 * x, 0.5 + 0.5 * x])
    ww = omega * np.concatenate([0.5 * w, 0.5 * w])
    c = table.state(phi + t).cprime
    m0 = ww @ c
    tbar = (ww @ (t * c)) / m0
    split = m0 * (ww @ ((t - tbar) ** 2 * c))
    err = abs(split - whole)
    return (split if err > tol * abs(split) else whole), err


def remainder_direct(table: TrigTable, phi: float, omega: float, n: int = 16) -> float:
    """Triple integral for ``R`` over ``phi <= u <= s <= t <= phi + omega``."""
    x, w = gauss_legendre(n)
    a, b, c = np.meshgrid(x, x, x, indexing="ij")
    wa, wb, wc = np.meshgrid(w, w, w, indexing="ij")
    t = omega * a
    s = t * b
    u = s * c
    weight = wa * wb * wc * omega**3 * a**2 * b
    s0 = table.state(np.array([phi]))
    st = table.state(phi + t[:, 0, 0])
    ss = table.state(phi + s[:, :, 0])
    su = table.state(phi + u)
    bracket = cross(s0.Q[0], su.Q) - t * (su.Q @ s0.P[0])
    integrand = (t - s) * (s - u) * bracket * st.cprime[:, None, None] * ss.cprime[:, :, None] * su.cprime
    return float(np.sum(weight * integrand))


def pr_decomposition(table: TrigTable, phi: float, omega: float, direct: bool = False) -> PRDecomposition:
    if omega == 0:
        raise ValueError("omega must be nonzero")
    p, err = p_term(table, phi, omega)
    j = float(reduced_jacobian(table, phi, omega))
    rd = remainder_direct(table, phi, omega) if direct else None
    return PRDecomposition(float(p), j - float(p), j, rd, err)


def pw_integration_identity(table: TrigTable, phi: float, omega: float, n: int = 32) -> float:
    """``P`` minus ``2 D_w int_0^w (w - t) D_t dt - (int_0^w D_t dt)^2`` where
    ``D_t = C(phi + t) - C(phi)``."""
    if omega == 0:
        raise ValueError("omega must be nonzero")
    p, _ = p_term(table, phi, omega)
    x, w = gauss_legendre(n)
    t = omega * x
    c0 = table.ccirc(np.array([phi]))[0]
    d = table.ccirc(phi + t) - c0
    d_full = table.ccirc(np.array([phi + omega]))[0] - c0
    lhs = 2.0 * d_full * omega * (w @ ((omega - t) * d)) - (omega * (w @ d)) ** 2
    return float(p - lhs)


# inversion ---------------------------------------------------------------

@dataclass(frozen=True)
class InverseResult:
    params: GeodesicParams
    residual: float
    iterations: int

    @property
    def distance(self) -> float:
        return self.params.r

    def to_dict(self) -> dict:
        return {
            "params": {"r": self.params.r, "phi": self.params.phi, "omega": self.params.omega},
            "distance": self.distance,
            "residual": self.residual,
            "iterations": self.iterations,
        }


class InversionError(RuntimeError):
    pass


def _seed_grid(table: TrigTable, grid: int, sign: float):
    # unit-speed endpoints on a (phi, omega) grid, cached on the table
    memo = table.__dict__.setdefault("_seed_memo", {})
    key = (grid, sign)
    if key not in memo:
        per = 2 * table.pi_polar
        phis = per * np.arange(grid) / grid
        omegas = sign * per * (np.arange(1, grid) / grid) * 0.999
        pg, og = np.meshgrid(phis, omegas, indexing="ij")
        xs, ys, zs = exp_coords(table, 1.0, pg, og, 1.0)
        memo[key] = (pg, og, xs, ys) + _chord_features(xs, ys, zs)
    return memo[key]


def _chord_features(x, y, z):
    chord2 = x * x + y * y
    return np.arctan2(y, x), z / chord2


def inverse_exp(table: TrigTable, target: HeisPoint, tol: float = 1e-12, grid: int = 128,
                max_iter: int = 200) -> InverseResult:
    """Parameters ``(r, phi, omega)`` with ``G_1(r, phi, omega) = target``.

    ``z = 0`` is the straight line.  Otherwise the endpoint of the unit-speed
    geodesic is scale free in ``(chord direction, z / |chord|^2)``; a grid in
    ``(phi, omega)`` gives the starting point and a root solve on the scaled
    residual finishes.  ``r`` is the distance from the origin.
    """
    X, Y, Z = target.x, target.y, target.z
    L = math.hypot(X, Y)
    if L == 0 and Z == 0:
        raise InversionError("target is the origin")
    per = 2 * table.pi_polar
    if Z == 0:
        r = float(table.norm.value(np.array([X, Y])))
        theta = _primal_angle(table, np.array([X, Y]) / r)
        phi = float(table.ccirc_inverse(np.array([theta]))[0]) % per
        res = GeodesicParams(r, phi, 0.0)
        got = exp_map(table, res).as_array()
        return InverseResult(res, float(np.max(np.abs(got - [X, Y, Z]))), 0)
    if L == 0:
        raise InversionError("targets on the z-axis need |omega| = 2 pi_polar (outside the chart)")

    pg, og, xs, ys, ang, rho = _seed_grid(table, grid, 1.0 if Z > 0 else -1.0)
    ang_t, rho_t = _chord_features(X, Y, Z)
    dang = np.angle(np.exp(1j * (ang - ang_t)))
    cost = dang**2 + (np.log(np.abs(rho)) - math.log(abs(rho_t))) ** 2
    i, k = np.unravel_index(np.argmin(cost), cost.shape)
    phi0, om0 = pg[i, k], og[i, k]
    r0 = L / math.hypot(xs[i, k], ys[i, k])

    def resid(v):
        lr, ph, om = v
        om = float(np.clip(om, -per * (1 - 1e-12), per * (1 - 1e-12)))
        x, y, z = exp_coords(table, math.exp(lr), ph, om, 1.0)
        return [(x - X) / L, (y - Y) / L, (z - Z) / L**2]

    sol = root(resid, [math.log(r0), phi0, om0], method="hybr",
               options={"xtol": 1e-15, "maxfev": max_iter * 4})
    lr, ph, om = sol.x
    if abs(om) >= per:
        raise InversionError("rotation rate left the chart |omega| < 2 pi_polar")
    res = GeodesicParams(math.exp(lr), ph % per, float(om))
    got = exp_map(table, res).as_array()
    err = float(np.max(np.abs(got - [X, Y, Z]) / np.array([L, L, L * L])))
    if err > max(tol, 1e-9):
        raise InversionError(f"no convergence: best scaled residual {err:.3e}")
    return InverseResult(res, err, int(sol.nfev))


def _primal_angle(table: TrigTable, point) -> float:
    """Generalized angle of a point on the primal sphere."""
    target = math.atan2(point[1], point[0])
    b = table.beta
    pts = table.dual.gradient(table._dir(b))
    ang = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0]))
    target = ang[0] + np.mod(target - ang[0], 2 * math.pi)
    j = int(np.clip(np.searchsorted(ang, target) - 1, 0, len(b) - 2))
    def f(beta):
        p = table.dual.gradient(table._dir(np.array(beta)))
        a = math.atan2(p[1], p[0])
        return a + 2 * math.pi * round((ang[j] - a) / (2 * math.pi)) - target

    beta = brentq(f, b[j], b[j + 1], xtol=1e-15)
    return float(table._theta_raw(np.array([beta]))[0])


# distortion coefficients -------------------------------------------------

def _sigma(K: float, N: float, t: float, theta: float) -> float:
    if K == 0:
        return t
    if K > 0 and N * math.pi**2 <= K * theta**2:
        return math.inf
    if theta == 0:
        return t
    if K > 0:
        k = theta * math.sqrt(K / N)
        return math.sin(t * k) / math.sin(k)
    k = theta * math.sqrt(-K / N)
    return math.sinh(t * k) / math.sinh(k)


def distortion_coefficients(K: float, N: float, t: float, theta: float) -> tuple[float, float]:
    """``(sigma_{K,N}^t(theta), tau_{K,N}^t(theta))``.  For ``N = 1`` the
    exponent ``1 - 1/N`` vanishes and ``tau = t``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 0 <= t <= 1 or theta < 0:
        raise ValueError("need t in [0, 1] and theta >= 0")
    sigma = _sigma(K, N, t, theta)
    if N == 1:
        return sigma, t
    s = _sigma(K, N - 1, t, theta)
    tau = math.inf if math.isinf(s) else t ** (1 / N) * s ** (1 - 1 / N)
    return sigma, tau
