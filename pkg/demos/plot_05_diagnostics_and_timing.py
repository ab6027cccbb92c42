"""
How loose are the bounds, and how does the cost scale?
======================================================

The Lipschitz bounds are evaluated at the margin ``beta`` and radius ``R``
measured on the sampled points, so the interesting number is the gap
between bound and observation. Timing is fitted on a log-log scale.
"""

from levinv import GenConfig, gen_instance
from levinv.diagnostics import (basic_lipschitz_suite, empirical_hessian_lipschitz,
                                timing_bench)

inst, reg, truth = gen_instance(GenConfig(10, 3, seed=0))

###############################################################################
rep = empirical_hessian_lipschitz(inst, reg, truth.x_star, 0.1, samples=200)
print(f"beta = {rep.beta:.3g}, R = {rep.R:.3g}")
print(f"Hessian: observed {rep.max_ratio:.3g}, bound {rep.bound:.3g}, gap {rep.gap:.2g}x")
for q, (r, g) in enumerate(zip(rep.term_ratios, rep.term_gaps), 1):
    print(f"  D{q}: observed {r:.3g}, gap {g:.2g}x")

###############################################################################
basic = basic_lipschitz_suite(inst, truth.x_star, 0.1, samples=100)
for name in basic.ratios:
    print(f"{name:9s} {basic.ratios[name]:.3g} <= {basic.bounds[name]:.3g}")

###############################################################################
# Gradient cost grows like ``n^2`` at fixed ``d``.
scaling = timing_bench([(n, 8) for n in (256, 512, 1024, 2048)], hessian_max_n=0)
for row in scaling.rows:
    print(f"n={row.n:5d}  {row.grad_ms:8.2f} ms")
print("slope:", round(scaling.slope_n[8], 2))
