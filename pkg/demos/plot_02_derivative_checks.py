"""
Checking derivatives against finite differences
===============================================

The gradient and Hessian of the loss are compared with central
differences of a loss evaluated through an SVD, which shares no code with
the analytic path.
"""

import numpy as np

from levinv import GenConfig, gen_instance, snapshot
from levinv.crosscheck import check_point, probe_point
from levinv.hessian import hessian_loss_exp
from levinv.oracle import fd_hessian, loss_exp_direct

###############################################################################
# A generated instance with a noisy target, evaluated away from the optimum.
inst, reg, truth = gen_instance(GenConfig(25, 5, seed=4, noise=0.05))
x = probe_point(inst, truth.x_star, 0.2, seed=4)
res = check_point(inst, reg, x)
for name, err in res.errors.items():
    print(f"{name:9s} {err:.2e}  (threshold {res.thresholds[name]:.0e})")

###############################################################################
# The Hessian has two forms. The curvature multiplier ``sigma_ii - c_i``
# differentiates the loss; writing ``sigma_ii`` alone does not, unless the
# target is zero.
snap = snapshot(inst, x, want_full=True)
fd = fd_hessian(loss_exp_direct(inst), x)
for mode in ("residual", "literal"):
    H = hessian_loss_exp(inst, snap, mode)
    print(mode, "error vs FD:", np.max(np.abs(H - fd)) / (1 + np.max(np.abs(H))))
