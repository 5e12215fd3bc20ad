"""Linear search on strongly regular graphs under the three analytic jumping rates.

For each graph the first success peak is compared with pi sqrt(N)/2, and the
numerically balanced rate gamma* is listed for reference.
"""

from __future__ import annotations

import math

from nlqsearch.dynamics import Controls, GammaPolicy, Nonlinearity, SearchConfig, find_gamma_numeric, first_peak, integrate

graphs = [("paley", 101), ("latin_square", 30), ("latin_square", 50)]
print(f"{'graph':<18} {'policy':<13} {'gamma':>9} {'peak':>7} {'t_peak':>8} {'pi sqrt(N)/2':>13}")
for family, size in graphs:
    base = SearchConfig(family, size)
    n = base.collapsed().n_vertices
    for policy in ("srg_c1", "srg_c2", "srg_c2_prime"):
        cfg = SearchConfig(family, size, 1, Nonlinearity(), GammaPolicy(policy), Controls(sample_dt=0.05))
        tr = integrate(cfg, math.pi * math.sqrt(n), dense=True)
        t_pk, p_pk = first_peak(tr)
        print(f"{family + f'({size})':<18} {policy:<13} {tr.gamma[0]:9.6f} {p_pk:7.4f} {t_pk:8.3f} "
              f"{math.pi * math.sqrt(n) / 2:13.3f}")
    print(f"{'':<18} {'numeric':<13} {find_gamma_numeric(base.collapsed()):9.6f}")
