"""
Gradient descent with a fixed step and with a decaying schedule
===============================================================

A fixed step of one over an estimated smoothness constant decreases the
loss at every step. The schedule ``2 / (alpha (k + 1))`` comes with an
averaged iterate and a suboptimality bound.
"""

import numpy as np

from levinv import (GDConfig, GenConfig, Objective, averaged_iterate, gen_instance,
                    gradient_descent, perturb_start)
from levinv.solver import estimate_smoothness

inst, reg, truth = gen_instance(GenConfig(20, 4, seed=2))
x0 = perturb_start(truth.x_star, 0.05, seed=2)
obj = Objective(inst, reg)

###############################################################################
# Fixed step.
L_hat = estimate_smoothness(obj, x0, 0.05, samples=20)
run = gradient_descent(inst, reg, x0, GDConfig(eta=1 / L_hat), x_star=truth.x_star)
print(f"eta = {1 / L_hat:.3g}: {run.iterations} steps, {run.message}")
print("monotone:", bool(np.all(np.diff(run.loss_total) <= 0)), " final r:", run.r[-1])

###############################################################################
# Decaying schedule and the weighted average of its iterates. The bound
# needs ``alpha`` no larger than the strong convexity, so take the
# smallest Hessian eigenvalue at the optimum (the optimal loss is 0 here).
alpha = np.linalg.eigvalsh(obj.evaluate(truth.x_star, 2)[2])[0]
sched = gradient_descent(inst, reg, x0, GDConfig(alpha=alpha, max_iter=400), x_star=truth.x_star)
x_bar, bound = averaged_iterate(sched, alpha)
print(f"alpha = {alpha:.3g}: last iterate r = {sched.r[-1]:.3e}")
print(f"loss at average {obj.loss(x_bar):.3e} <= bound {bound:.3e}")
