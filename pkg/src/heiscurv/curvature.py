"""Curvature exponent of the sub-Finsler Heisenberg group.

The exponent field ``N(phi, omega) = 1 + omega d_omega J_R / J_R`` is swept on
the chart ``phi = 2 pi_polar s``, ``omega = 2 pi_polar (2 r - 1)``; its
supremum (together with the value 5 reached as ``omega -> 0``) is the optimal
``N`` in MCP(0, N).  The same number is recovered independently from the ratio
test ``J_R(phi, omega t) >= t^(N-1) J_R(phi, omega)``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import RunConfig
from .geometry import PSI_STABLE, jacobian_parts, pr_decomposition, reduced_jacobian
from .norms import GraphArc, NormSpec, build_norm, disc_arc, hfamily_boundary, is_strongly_convex
from .trig import DualState, TrigTable, affine_check, second_difference, trig_table

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class CurvatureError(RuntimeError):
    pass


class AffineNormError(CurvatureError):
    """The correspondence map is affine: the norm comes from a scalar product."""


@dataclass
class CurvatureReport:
    n_curv: float
    argmax: tuple[float, float]
    grid: tuple[int, int]
    exclusion_band: float
    method: str = "derivative_field"
    agreement: float | None = None
    grid_max: float = float("nan")
    refined_max: float = float("nan")
    limit_value: float = 5.0
    at_limit: bool = False
    band_violations: int = 0
    resolution: int = 0
    elapsed: float = 0.0
    ratio_n: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("elapsed")  # timings would break byte-identical reports
        d["argmax"] = {"phi": self.argmax[0], "omega": self.argmax[1]}
        d["grid"] = {"s": self.grid[0], "r": self.grid[1]}
        return d


# exponent field ----------------------------------------------------------

def n_field(table: TrigTable, phi, omega, cfg: RunConfig | None = None):
    """``1 + omega J_R'/J_R``; the limit 5 for ``|omega| < eps_omega pi_polar``
    and NaN where ``J_R`` is below the floor (zero locus)."""
    cfg = cfg or RunConfig()
    phi, omega = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(omega, dtype=float))
    j, dj = jacobian_parts(table, phi, omega)
    return _n_from_parts(table, omega, j, dj, cfg)


def _n_from_parts(table, psi, j, dj, cfg):
    near = np.abs(psi) < cfg.eps_omega * table.pi_polar
    # the small-angle integral forms keep J_R accurate far below the floor
    ok = (j > cfg.j_floor) | ((np.abs(psi) < PSI_STABLE) & (j > 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        n = 1.0 + psi * dj / j
    n = np.where(ok, n, np.nan)
    n = np.where(near, 5.0, n)
    return n if np.ndim(n) else float(n)


def _map_chunks(fn, arr, workers):
    if workers <= 1 or arr.size < 4096:
        return fn(arr)
    with ThreadPoolExecutor(workers) as ex:
        parts = list(ex.map(fn, np.array_split(arr, workers)))
    return DualState(*(np.concatenate([getattr(x, k) for x in parts])
                       for k in ("phi", "Q", "P", "cprime")))


def _sweep(table: TrigTable, S: int, R: int, workers: int = 1):
    """Field data on the (s, r) chart.  Angles phi + psi fall on a lattice, so
    the trig table is evaluated once per distinct angle."""
    per = 2.0 * table.pi_polar
    i = np.arange(S)
    jr = np.arange(1, R)
    jr = jr[2 * jr != R]
    r = jr / R
    phi = per * i / S
    psi = per * (2.0 * r - 1.0)
    mod = S * R
    keys = np.mod(i[:, None] * R + 2 * jr[None, :] * S - mod, mod)
    uniq, inv = np.unique(keys, return_inverse=True)
    st1 = _map_chunks(table.state, per * uniq / mod, workers)
    st0 = table.state(phi)
    inv = inv.reshape(keys.shape)
    q1, p1, c1 = st1.Q[inv], st1.P[inv], st1.cprime[inv]
    q0, p0 = st0.Q[:, None, :], st0.P[:, None, :]
    ps = psi[None, :]
    j = 2.0 - np.sum(q1 * p0, -1) - np.sum(p1 * q0, -1) - ps * (p0[..., 0] * p1[..., 1] - p0[..., 1] * p1[..., 0])
    dj = c1 * ((q0[..., 0] * q1[..., 1] - q0[..., 1] * q1[..., 0]) - ps * np.sum(p0 * q1, -1))
    small = np.abs(psi) < PSI_STABLE
    if small.any():
        pg = np.broadcast_to(phi[:, None], (S, small.sum()))
        sg = np.broadcast_to(psi[small][None, :], (S, small.sum()))
        j[:, small], dj[:, small] = jacobian_parts(table, pg, sg)
    return phi, r, np.broadcast_to(ps, j.shape), j, dj


def curvature_exponent(table: TrigTable, cfg: RunConfig | None = None,
                       grid: tuple[int, int] | None = None, cross_check: bool = False) -> CurvatureReport:
    """Supremum of the exponent field over the reparametrized chart.  With
    ``cross_check`` the minimal exponent of the ratio test is reported too."""
    cfg = cfg or RunConfig()
    t0 = time.perf_counter()
    S, R = grid or (cfg.grid_s, cfg.grid_r)
    band = cfg.band
    if not is_strongly_convex(table.norm):
        # C' is unbounded and MCP(0, N) fails for every N
        return CurvatureReport(
            n_curv=math.inf, argmax=(math.nan, math.nan), grid=(S, R), exclusion_band=band,
            resolution=table.resolution, elapsed=time.perf_counter() - t0,
            note="norm is not strongly convex; MCP(0, N) fails for every N",
        )
    phi, r, psi, j, dj = _sweep(table, S, R, cfg.workers())
    n = _n_from_parts(table, psi, j, dj, cfg)
    rr = np.broadcast_to(r[None, :], j.shape)
    in_band = (rr < band) | (rr > 1.0 - band)
    # inside the band J_R decreases towards the endpoint zeros
    band_bad = in_band & (j > cfg.j_floor) & ((rr - 0.5) * dj >= 0)
    inner = ~in_band
    bad = inner & ~np.isfinite(n)
    if bad.any():
        a, b = np.argwhere(bad)[0]
        raise CurvatureError(
            f"exponent field undefined at s={a / S:.6g}, r={r[b]:.6g} (J_R={j[a, b]:.3e})")
    field_vals = np.where(inner, n, -np.inf)
    k = np.argmax(field_vals, axis=1)
    best = field_vals[np.arange(S), k]

    # golden-section refinement of each slab maximum
    step = 1.0 / R
    rk = r[k]
    lo = np.maximum(rk - step, band)
    hi = np.minimum(rk + step, 1.0 - band)
    left = rk < 0.5
    lo = np.where(left, lo, np.maximum(lo, 0.5 + 1e-12))
    hi = np.where(left, np.minimum(hi, 0.5 - 1e-12), hi)
    per = 2.0 * table.pi_polar

    def field_at(rv):
        return np.nan_to_num(n_field(table, phi, per * (2.0 * rv - 1.0), cfg), nan=-np.inf)

    a, b = lo.copy(), hi.copy()
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = field_at(x1), field_at(x2)
    while np.max(b - a) > cfg.refine_tol:
        move = f1 < f2
        a = np.where(move, x1, a)
        b = np.where(move, b, x2)
        x1n = np.where(move, x2, b - GOLDEN * (b - a))
        x2n = np.where(move, a + GOLDEN * (b - a), x1)
        fn = field_at(np.where(move, x2n, x1n))
        f1, f2 = np.where(move, f2, fn), np.where(move, fn, f1)
        x1, x2 = x1n, x2n
    xr = np.where(f1 > f2, x1, x2)
    fr = np.maximum(f1, f2)
    refined = np.maximum(fr, best)
    r_best = np.where(fr > best, xr, rk)
    slab = int(np.argmax(refined))
    top = float(refined[slab])
    at_limit = top <= 5.0
    n_curv = max(top, 5.0)
    arg = (float(phi[slab]), 0.0 if at_limit else float(per * (2.0 * r_best[slab] - 1.0)))
    report = CurvatureReport(
        n_curv=n_curv,
        argmax=arg,
        grid=(S, R),
        exclusion_band=band,
        grid_max=float(np.max(best)),
        refined_max=top,
        at_limit=bool(at_limit),
        band_violations=int(band_bad.sum()),
        resolution=table.resolution,
    )
    if cross_check:
        report.ratio_n = minimal_mcp_exponent(table, cfg)
        report.agreement = abs(report.ratio_n - n_curv)
        report.method = "both"
    report.elapsed = time.perf_counter() - t0
    return report


# ratio characterization --------------------------------------------------

@dataclass
class MCPResult:
    passed: bool
    N: float
    min_slack: float
    worst: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio_data(table: TrigTable, cfg: RunConfig):
    memo = table.__dict__.setdefault("_ratio_memo", {})
    key = (cfg.mcp_phi, cfg.mcp_omega, cfg.mcp_t, cfg.j_floor)
    if key in memo:
        return memo[key]
    per = 2.0 * table.pi_polar
    M = cfg.mcp_omega
    jr = np.arange(1, M)
    jr = jr[2 * jr != M]
    phi = per * np.arange(cfg.mcp_phi) / cfg.mcp_phi
    omega = per * (2.0 * jr / M - 1.0)
    ts = np.array([t for t in cfg.mcp_t if t < 1.0])
    pg, og = np.meshgrid(phi, omega, indexing="ij")
    j1, _ = jacobian_parts(table, pg, og)
    jt, _ = jacobian_parts(table, pg[..., None], og[..., None] * ts)
    ok = j1 > cfg.j_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ok[..., None], jt / j1[..., None], np.inf)
    memo[key] = (phi, omega, ts, ratio)
    return memo[key]


def mcp_ratio_check(table: TrigTable, N: float, cfg: RunConfig | None = None) -> MCPResult:
    """Checks ``J_R(phi, omega t) >= t^(N-1) J_R(phi, omega)`` on a product grid.
    Slack is reported relative to ``J_R(phi, omega)``."""
    if not N > 1:
        raise ValueError("N must exceed 1")
    cfg = cfg or RunConfig()
    phi, omega, ts, ratio = _ratio_data(table, cfg)
    slack = ratio - ts ** (N - 1.0)
    idx = np.unravel_index(np.argmin(slack), slack.shape)
    worst = float(slack[idx])
    return MCPResult(
        passed=bool(worst >= -cfg.mcp_slack_tol),
        N=float(N),
        min_slack=worst,
        worst={"phi": float(phi[idx[0]]), "omega": float(omega[idx[1]]), "t": float(ts[idx[2]])},
    )


def minimal_mcp_exponent(table: TrigTable, cfg: RunConfig | None = None) -> float:
    """Smallest ``N`` passing the ratio check, by bisection on the pass flag."""
    cfg = cfg or RunConfig()
    lo, hi = 1.0 + 1e-9, 5.0
    while not mcp_ratio_check(table, hi, cfg).passed:
        lo, hi = hi, 2.0 * hi
        if hi > 1e4:
            raise CurvatureError("ratio check fails for every N below 1e4")
    while hi - lo > cfg.mcp_bisect_tol:
        mid = 0.5 * (lo + hi)
        if mcp_ratio_check(table, mid, cfg).passed:
            hi = mid
        else:
            lo = mid
    return hi


# rigidity probe ----------------------------------------------------------

@dataclass
class RigidityWitness:
    delta: float
    phi: float
    omega: float
    H: float
    A: float
    B: float
    r_violation: float
    ratio: float
    r4_threshold: float
    method: str
    verified: bool
    phi_bar: float = float("nan")
    K: float = float("nan")
    epsilon: float = float("nan")
    ratio_check: float = float("nan")   # same ratio through the integral form

    def to_dict(self) -> dict:
        return asdict(self)


def _first_crossing(f, lo, hi, n=2048, last=False):
    """First (or last) point of ``[lo, hi]`` where ``f >= 0``, refined by brentq."""
    x = np.linspace(lo, hi, n + 1)
    v = f(x)
    idx = np.flatnonzero(v >= 0)
    if len(idx) == 0:
        return None
    if last:
        k = idx[-1]
        if k == n:
            return hi
        g = lambda s: float(f(np.array([s]))[0])
        return brentq(g, x[k], x[k + 1], xtol=1e-14) if v[k] > 0 else x[k]
    k = idx[0]
    if k == 0:
        return lo
    g = lambda s: float(f(np.array([s]))[0])
    return brentq(g, x[k - 1], x[k], xtol=1e-14) if v[k] > 0 else x[k]


def _grid_min(func, lo, hi, n=4096):
    """Grid minimum with one dyadic refinement around the minimizer."""
    x = np.linspace(lo, hi, n + 1)
    v = func(x)
    k = int(np.argmin(v))
    a, b = x[max(k - 1, 0)], x[min(k + 1, n)]
    xf = np.linspace(a, b, 65)
    vf = func(xf)
    kf = int(np.argmin(vf))
    if vf[kf] < v[k]:
        return float(xf[kf]), float(vf[kf])
    return float(x[k]), float(v[k])


def _pick_violation(table, phi, omega, rs, cfg):
    """The ``r`` with the smallest ``J_R(phi, r omega) / (r^4 J_R(phi, omega))``
    among those where ``J_R(phi, r omega)`` is resolved, if that value is < 1."""
    j1 = float(reduced_jacobian(table, phi, omega))
    jr, _ = jacobian_parts(table, np.full(rs.shape, phi), omega * rs)
    excess = np.where(jr > cfg.j_floor, jr / (j1 * rs**4), np.inf)
    k = int(np.argmin(excess))
    if not excess[k] < 1:
        return None, None
    return float(rs[k]), float(jr[k] / j1)


def rigidity_probe(table: TrigTable, h: float = 0.5, cfg: RunConfig | None = None,
                   n_phi: int = 512, n_delta: int = 16, eps_fraction: float = 1e-3) -> RigidityWitness:
    """Witness ``J_R(phi, r omega) < r^4 J_R(phi, omega)`` of the failure of
    MCP(0, 5), built along the second-difference construction.  Falls back to
    the maximizer of the exponent field if the construction gives no
    violation at the sampled ``r``."""
    cfg = cfg or RunConfig()
    fit = affine_check(table, cfg.affine_tol)
    if fit.affine:
        raise AffineNormError("correspondence map is affine; there is nothing to witness")
    per = 2.0 * table.pi_polar
    C = table.ccirc
    cp = table.ccirc_prime

    # a positive second difference
    phis = per * np.arange(n_phi) / n_phi
    deltas = h * np.arange(1, n_delta + 1) / n_delta
    pg, dg = np.meshgrid(phis, deltas, indexing="ij")
    d2 = second_difference(table, pg, dg)
    a_, b_ = np.unravel_index(np.argmax(d2), d2.shape)
    H = float(d2[a_, b_])
    phi_bar, delta = float(phis[a_]), float(deltas[b_])
    if not H > 0:
        raise CurvatureError("no positive second difference at this resolution")

    # slope bound and the last contact point
    K = float((C(phi_bar + delta) - C(phi_bar)) / delta)
    L = K + 0.5 * H * delta
    c_bar = float(C(phi_bar))
    phi1 = _first_crossing(lambda th: C(th) - c_bar - L * (th - phi_bar), phi_bar, phi_bar + delta, last=True)
    c1 = float(C(phi1))
    w_hi = phi_bar + 2 * delta - phi1
    omega_bar = _first_crossing(lambda t: C(phi1 + t) - c1 - L * t, w_hi * 1e-6, w_hi)
    if omega_bar is None:
        omega_bar = w_hi

    # infimum of C' on the window and the angles of the second construction
    A_at, A = _grid_min(cp, phi1, phi1 + omega_bar)
    eps = eps_fraction * max(A, 1e-12)
    phi = min(A_at, phi1 + omega_bar * (1 - 1e-6))
    end = phi1 + omega_bar
    B = float((C(end) - C(phi)) / (end - phi)) - A
    cphi = float(C(phi))
    omega = _first_crossing(lambda t: C(phi + t) - cphi - (A + B) * t, (end - phi) * 1e-6, end - phi)
    if omega is None:
        omega = end - phi

    method = "constructive"
    rs = np.logspace(-3, -0.0005, 400)
    r, ratio = _pick_violation(table, phi, omega, rs, cfg)
    if r is None:
        method = "ratio_scan"
        report = curvature_exponent(table, cfg, grid=(cfg.coarse_s, cfg.coarse_r))
        phi, omega = report.argmax
        if omega == 0:
            raise CurvatureError("no witness found at this resolution")
        r, ratio = _pick_violation(table, phi, omega, 1.0 - np.logspace(-1, -4, 200), cfg)
        if r is None:
            raise CurvatureError("no witness found at this resolution")
    # independent check through the integral form P + R of the reduced Jacobian
    num = pr_decomposition(table, phi, r * omega, direct=True)
    den = pr_decomposition(table, phi, omega, direct=True)
    again = (num.P + num.R_direct) / (den.P + den.R_direct)
    return RigidityWitness(
        delta=delta, phi=float(phi), omega=float(omega), H=H, A=float(A), B=float(B),
        r_violation=r, ratio=ratio, r4_threshold=r**4, method=method,
        verified=bool(again < r**4), phi_bar=phi_bar, K=K, epsilon=eps, ratio_check=float(again),
    )


# prescription ------------------------------------------------------------

@dataclass
class Prescription:
    t_star: float
    report: CurvatureReport
    profile: list = field(default_factory=list)
    coarse_n: float = float("nan")

    def to_dict(self) -> dict:
        return {"t_star": self.t_star, "coarse_n": self.coarse_n, "report": self.report.to_dict(),
                "profile": [list(p) for p in self.profile]}


class PrescriptionError(CurvatureError):
    def __init__(self, msg, profile):
        super().__init__(msg)
        self.profile = profile


def interpolated_exponent(q: float, t: float, cfg: RunConfig, coarse: bool = True) -> CurvatureReport:
    norm = build_norm(NormSpec("interpolated", {"q": q, "t": t}))
    if coarse:
        table = TrigTable(norm, min(cfg.resolution, 1024))
        return curvature_exponent(table, cfg, grid=(cfg.coarse_s, cfg.coarse_r))
    return curvature_exponent(TrigTable(norm, cfg.resolution), cfg)


def prescribe_exponent(n_star: float, q: float = 4.0, tol: float = 0.01,
                       cfg: RunConfig | None = None, max_iter: int = 60) -> Prescription:
    """Parameter ``t`` of the interpolation family whose curvature exponent is
    ``n_star``.  Only continuity in ``t`` is assumed: the search keeps a sign
    bracket and falls back to a scan when the end points do not bracket."""
    if not n_star > 5:
        raise ValueError("target exponent must exceed 5")
    cfg = cfg or RunConfig()
    profile: list[tuple[float, float]] = []

    def f(t, coarse=True):
        n = interpolated_exponent(q, t, cfg, coarse).n_curv
        if coarse:
            profile.append((float(t), float(n)))
        return n - n_star

    lo, hi = 0.0, 1.0 - cfg.eps_t
    flo = f(lo)
    if abs(flo) <= tol:
        return Prescription(0.0, interpolated_exponent(q, 0.0, cfg, coarse=False), profile, flo + n_star)
    fhi = f(hi)
    if not (flo < 0 < fhi or fhi < 0 < flo):
        ts = np.linspace(lo, hi, 12)[1:-1]
        vals = [f(t) for t in ts]
        pts = [(lo, flo)] + list(zip(ts, vals)) + [(hi, fhi)]
        for (a, fa), (b, fb) in zip(pts, pts[1:]):
            if fa * fb < 0:
                lo, flo, hi, fhi = a, fa, b, fb
                break
        else:
            raise PrescriptionError("no sign change of N_curv(t) - N* below t = 1 - eps_t", profile)
    t_mid, f_mid = lo, flo
    for _ in range(max_iter):
        t_mid = 0.5 * (lo + hi)
        f_mid = f(t_mid)
        if abs(f_mid) <= 0.25 * tol or hi - lo < 1e-7:
            break
        if (f_mid < 0) == (flo < 0):
            lo, flo = t_mid, f_mid
        else:
            hi, fhi = t_mid, f_mid
    coarse_n = f_mid + n_star
    # confirm at full resolution; continue on the fine field if the grids disagree
    full = interpolated_exponent(q, t_mid, cfg, coarse=False)
    if abs(full.n_curv - n_star) > 0.5 * tol:
        a, b = max(0.0, t_mid - 0.05), min(1.0 - cfg.eps_t, t_mid + 0.05)
        fa = interpolated_exponent(q, a, cfg, coarse=False).n_curv - n_star
        fb = interpolated_exponent(q, b, cfg, coarse=False).n_curv - n_star
        if fa * fb < 0:
            for _ in range(max_iter):
                t_mid = 0.5 * (a + b)
                full = interpolated_exponent(q, t_mid, cfg, coarse=False)
                fm = full.n_curv - n_star
                if abs(fm) <= 0.5 * tol or b - a < 1e-7:
                    break
                if (fm < 0) == (fa < 0):
                    a, fa = t_mid, fm
                else:
                    b = t_mid
    return Prescription(float(t_mid), full, profile, float(coarse_n))


# graph-arc closed forms --------------------------------------------------

@dataclass(frozen=True)
class ArcValues:
    y: np.ndarray
    omega: np.ndarray
    jr: np.ndarray
    wdjr: np.ndarray
    cprime: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.wdjr / self.jr


def arc_values(arc: GraphArc, y) -> ArcValues:
    """Reduced Jacobian at ``phi = 0`` along a dual-sphere arc ``x = g(y)``.

    With ``Q = (g, y)`` the paired primal point is ``(1, -g')/D``,
    ``D = g - y g'``, the dual angle is ``omega = 2 int_0^y g - y g`` and
    ``C' = -g'' / D^3``.
    """
    y = np.asarray(y, dtype=float)
    g, dg, d2g = arc.g(y), arc.dg(y), arc.d2g(y)
    omega = 2.0 * arc.integral(y) - y * g
    D = g - y * dg
    jr = 2.0 - g - 1.0 / D - omega * (-dg) / D
    cp = -d2g / D**3
    wdjr = omega * cp * (y - omega * g)
    return ArcValues(y, omega, jr, wdjr, cp)


def hfamily_values(h: int, y) -> ArcValues:
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(y > 1.0 / h + 1e-15):
        raise ValueError("y must lie in (0, 1/h]")
    return arc_values(hfamily_boundary(h), y)


def hfamily_ratio(h: int, y) -> float | np.ndarray:
    """``omega d_omega J_R(0, omega) / J_R(0, omega)`` at ``omega = omega(y)``."""
    r = hfamily_values(h, y).ratio
    return r if np.ndim(r) else float(r)


def hfamily_sup_ratio(h: int, n: int = 4001, j_floor: float = 1e-11) -> tuple[float, float]:
    """Largest ratio over ``y`` in ``(0, 1/h]`` and the ``y`` attaining it."""
    y = np.linspace(0.0, 1.0 / h, n)[1:]
    v = hfamily_values(h, y)
    # J_R ~ y^4 is lost to cancellation near y = 0; keep the resolved part
    r = np.where(v.jr > j_floor, v.ratio, -np.inf)
    k = int(np.argmax(r))
    return float(r[k]), float(y[k])


def disc_ratio(y) -> np.ndarray:
    """The same closed forms on the Euclidean circle."""
    return arc_values(disc_arc(), y).ratio
