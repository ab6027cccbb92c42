"""
Leverage scores of a rescaled matrix
====================================

Rows of ``A`` are divided by the entries of ``s = Ax - b``; the leverage
scores are the diagonal of the projection onto the column space of the
result.
"""

import numpy as np

from levinv import ProblemInstance, snapshot, well_posedness
from levinv.oracle import sigma_direct

###############################################################################
# A two-row example small enough to check by hand: at ``x = 1`` we get
# ``s = [1, 2]`` and rows ``[1]`` and ``[0.5]``.
inst = ProblemInstance(np.array([[1.0], [1.0]]), np.array([0.0, -1.0]), np.array([0.5, 0.5]))
snap = snapshot(inst, [1.0], want_full=True)
print("s =", snap.s)
print("sigma =\n", snap.sigma_full)

###############################################################################
# The SVD route gives the same projection.
print("max gap to SVD basis:", np.max(np.abs(snap.sigma_full - sigma_direct(inst, [1.0]))))

###############################################################################
# Scores are a projection's diagonal: they lie in [0, 1] and sum to ``d``.
rng = np.random.default_rng(0)
A = rng.standard_normal((30, 4))
big = ProblemInstance(A, rng.standard_normal(30), np.zeros(30))
x = rng.standard_normal(4)
s = snapshot(big, x, want_full=True)
print("sum of scores:", s.sigma_diag.sum())
print("range:", s.sigma_diag.min(), s.sigma_diag.max())

###############################################################################
# The margins the bounds depend on.
wp = well_posedness(big, x, beta=0.05)
print(f"min |s_i| = {wp.min_abs_s:.3g}, sigma_min(A(x)) = {wp.sigma_min_Ax:.3g}, ok = {wp.ok}")
