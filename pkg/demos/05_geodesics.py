"""Geodesics of the Heisenberg group with an l4 ball as its unit sphere.

Shoots a geodesic, recovers its parameters from the endpoint, and splits the
reduced Jacobian of a non-Euclidean norm into its leading term P and a
remainder R of order omega^6.
"""
import numpy as np

from heiscurv import (GeodesicParams, NormSpec, TrigTable, build_norm, exp_map, inverse_exp,
                      pr_decomposition)

table = TrigTable(build_norm(NormSpec("lp", {"p": 4.0})), 4096)
p = GeodesicParams(1.3, 0.7, 0.8 * 2 * table.pi_polar)
end = exp_map(table, p)
res = inverse_exp(table, end)
print(f"endpoint {end.as_array()}")
print(f"recovered r = {res.params.r:.12f}, phi = {res.params.phi:.12f}, omega = {res.params.omega:.12f}")
print(f"distance {res.distance:.12f}, residual {res.residual:.1e}")

table = TrigTable(build_norm(NormSpec("interpolated", {"q": 4.0, "t": 0.5})), 4096)
print(f"\n{'omega':>8} {'J':>12} {'P':>12} {'R':>12} {'R/omega^6':>10}")
for om in np.geomspace(1e-2, 0.5, 6):
    d = pr_decomposition(table, 0.3, om, direct=True)
    print(f"{om:8.4f} {d.J:12.4e} {d.P:12.4e} {d.R_direct:12.4e} {d.R_direct / om**6:10.4f}")
