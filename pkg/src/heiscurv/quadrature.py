"""Small numerical helpers shared across modules: Gauss-Legendre rules and a
vectorized safeguarded Newton solver for monotone scalar maps."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def monotone_solve(func, target, lo, hi, x0=None, xtol=1e-15, maxiter=60):
    """Solve ``f(x) = target`` elementwise for an increasing ``f`` on ``[lo, hi]``.

    ``func(x)`` must return ``(f(x), f'(x))``.  Newton steps are used while they
    stay inside the current bracket, bisection otherwise, so flat spots
    (``f' = 0``) are harmless.
    """
    target = np.asarray(target, dtype=float)
    shape = target.shape
    target = target.reshape(-1)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), shape).reshape(-1).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), shape).reshape(-1).copy()
    if x0 is None:
        x = 0.5 * (lo + hi)
    else:
        x = np.clip(np.broadcast_to(np.asarray(x0, dtype=float), shape).reshape(-1), lo, hi)
    x = np.array(x, dtype=float, copy=True)
    active = np.ones(target.shape, dtype=bool)
    for _ in range(maxiter):
        if not active.any():
            break
        fx, dfx = func(x[active])
        res = fx - target[active]
        xa, la, ha = x[active], lo[active], hi[active]
        la = np.where(res < 0, xa, la)
        ha = np.where(res > 0, xa, ha)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dfx > 0, res / dfx, np.inf)
        xn = xa - step
        bad = ~np.isfinite(xn) | (xn <= la) | (xn >= ha)
        xn = np.where(bad, 0.5 * (la + ha), xn)
        done = (np.abs(xn - xa) <= xtol * np.maximum(1.0, np.abs(xa))) | (res == 0) | (ha - la <= xtol)
        x[active] = np.where(res == 0, xa, xn)
        lo[active], hi[active] = la, ha
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return x.reshape(shape)
