"""Generalized sine and cosine of a few planar norms.

Prints the area constants of each norm and of its dual, checks the
Pythagorean equality at corresponding angles, and shows where the
correspondence map is steep or flat.
"""
import numpy as np

from heiscurv import NormSpec, TrigTable, build_norm, correspondence, cos_sin, cos_sin_polar

NORMS = {
    "euclidean": NormSpec("euclidean", {}),
    "diag(1,4)": NormSpec("inner_product", {"matrix": [[1.0, 0.0], [0.0, 4.0]]}),
    "l4": NormSpec("lp", {"p": 4.0}),
    "l4/3": NormSpec("lp", {"p": 4.0 / 3.0}),
    "interpolated(4, 0.5)": NormSpec("interpolated", {"q": 4.0, "t": 0.5}),
}

rng = np.random.default_rng(0)
print(f"{'norm':>22} {'pi_omega':>14} {'pi_polar':>14} {'pythagoras':>11} {'min C':>9} {'max C':>9}")
for name, spec in NORMS.items():
    table = TrigTable(build_norm(spec), 4096)
    phi = rng.uniform(0, 2 * table.pi_polar, 1000)
    p = cos_sin(table, correspondence(table, phi))
    q = cos_sin_polar(table, phi)
    resid = np.max(np.abs(np.sum(p * q, axis=1) - 1))
    c = table.ccirc_prime_samples
    print(f"{name:>22} {table.pi_omega:14.10f} {table.pi_polar:14.10f} {resid:11.1e} {c.min():9.3g} {c.max():9.3g}")

# the area of the l4 ball has a closed form: 4 Gamma(5/4)^2 / Gamma(3/2)
from scipy.special import gamma
exact = 4 * gamma(1.25) ** 2 / gamma(1.5)
table = TrigTable(build_norm(NORMS["l4"]), 4096)
print(f"\nl4: pi_omega = {table.pi_omega:.15f}, area of the ball = {exact:.15f}")
