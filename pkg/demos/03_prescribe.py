"""Dial in a norm whose curvature exponent is 6.

The interpolated family moves from the disc (t = 0) toward the l4 ball; the
exponent grows continuously along the way, so bisection on t finds a target.
"""
import numpy as np

from heiscurv import RunConfig, prescribe_exponent
from heiscurv.curvature import interpolated_exponent

cfg = RunConfig()
print("coarse profile of N_curv along the family:")
for t in np.linspace(0.0, 0.6, 7):
    print(f"  t = {t:.2f}: N_curv ~ {interpolated_exponent(4.0, t, cfg).n_curv:.4f}")

res = prescribe_exponent(6.0, q=4, tol=0.05)
print(f"\nt_star = {res.t_star:.9f}, full-resolution N_curv = {res.report.n_curv:.6f}")
