"""Cubic nonlinearity on the complete graph: runtime pi/2 for every N once G = 1.

Prints the closed-form runtime and width next to the values measured from the
integrator, for growing N.
"""

from __future__ import annotations

import math

from nlqsearch.closedform import CompleteSearchParams, cubic_runtime, cubic_width
from nlqsearch.dynamics import Controls, GammaPolicy, Nonlinearity, SearchConfig, measure_width

print(f"{'N':>7} {'t* closed':>12} {'t* measured':>12} {'width exact':>12} {'width measured':>15}")
for n in (64, 256, 1024, 4096):
    g = n - 1.0
    params = CompleteSearchParams(n, 1, g)
    cfg = SearchConfig("complete", n, 1, Nonlinearity("cubic", g), GammaPolicy("cubic_critical"),
                       Controls(sample_dt=0.005))
    res = measure_width(cfg, 0.01, t_end=2.5)
    print(f"{n:>7} {cubic_runtime(params):12.8f} {res['t_peak']:12.8f} "
          f"{cubic_width(params):12.8f} {res['width']:15.8f}")
print(f"pi/2 = {math.pi / 2:.8f}")
