"""Norms built from arcs of y = x^h / h near the x-axis.

Along the arc the reduced Jacobian and its omega-derivative have closed
forms.  The supremum of the exponent field over the arc grows roughly like h,
while its value at the end of the arc, y = 1/h, decays like 1/h.
"""
from heiscurv import hfamily_ratio, hfamily_sup_ratio

print(f"{'h':>4} {'ratio at y=1/h':>16} {'* 4/h':>10} {'sup over arc':>14} {'at y':>8}")
for h in (8, 16, 32, 64):
    r = hfamily_ratio(h, 1.0 / h)
    sup, y = hfamily_sup_ratio(h)
    print(f"{h:4d} {r:16.8f} {4 * r / h:10.5f} {sup:14.5f} {y:8.5f}")
