"""Space-time optimum of the cubic nonlinearity as the number of marked vertices grows.

Shows the optimal exponent of g = N^kappa in both conventions and the resulting
space-time scaling, then the loglinear optimum.
"""

from __future__ import annotations

from nlqsearch.resources import cubic_resource_row, optimize_exponent, resource_table_csv

for lam in (0.0, 0.25, 0.5, 1.0):
    g_conv = optimize_exponent("cubic", lam)
    G_conv = optimize_exponent("cubic", lam, convention="G")
    print(f"lambda={lam:<5} kappa*(g)={g_conv['kappa_star']:<7} kappa*(G)={G_conv['kappa_star']:<7} "
          f"ST ~ {g_conv['st_scaling']}")
log = optimize_exponent("loglinear")
print(f"loglinear: sigma*={log['sigma_star']}, ST between {log['st_lower']} and {log['st_upper']}")
print()
print(resource_table_csv([cubic_resource_row(n, 0.5) for n in (1e3, 1e4, 1e5, 1e6)]), end="")
