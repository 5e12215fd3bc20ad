"""Loglinear nonlinearity: runtime bracket and the power-law trend of the runtime.

Uses k = N^(1/4) marked vertices and g = N^(1/8)/log(N/k).
"""

from __future__ import annotations

from nlqsearch.closedform import log_runtime_bounds, log_runtime_numeric
from nlqsearch.resources import fit_power_law, loglinear_recipe_points

n, k, g = 1024, 5, 1.0
b = log_runtime_bounds(n, k, g)
print(f"N={n}, k={k}, g={g}")
for name in ("lower", "lower_elementary", "lower_split"):
    print(f"  {name:<17} {b[name]:9.4f}")
print(f"  {'numeric':<17} {log_runtime_numeric(n, k, g):9.4f}")
for name in ("upper_tight", "upper_loose"):
    print(f"  {name:<17} {b[name]:9.4f}")

fit = fit_power_law(loglinear_recipe_points())
print(f"trend over N in [5e5, 1e6]: t* = {fit['prefactor']:.4f} N^{fit['exponent']:.4f} "
      f"(r^2 = {fit['r_squared']:.7f})")
