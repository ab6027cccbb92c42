"""Independent reference computations used to check the analytic formulas.

Nothing in here calls into :mod:`levinv.gradient` or :mod:`levinv.hessian`,
and :func:`sigma_direct` uses an SVD basis instead of the pivoted-QR Gram
inverse in :mod:`levinv.leverage`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainCrossing, RankDeficient, SingularScaling
from .instance import ProblemInstance
from .leverage import DELTA_MIN


@dataclass(frozen=True)
class FDConfig:
    """Central-difference settings. With ``relative=True`` the step for
    coordinate ``j`` is ``h * (1 + |x_j|)``."""

    h: float = 1e-5
    relative: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")

    def steps(self, x: np.ndarray) -> np.ndarray:
        if self.relative:
            return self.h * (1.0 + np.abs(x))
        return np.full(x.shape, self.h)


GRAD_FD = FDConfig(1e-5)
HESS_FD = FDConfig(1e-4)


def _call(f, x, guard):
    if guard is not None:
        guard(x)
    try:
        return float(f(x))
    except (SingularScaling, RankDeficient) as exc:
        raise DomainCrossing(f"probe at {x!r} is outside the domain: {exc}") from exc


def fd_gradient(f: Callable[[np.ndarray], float], x, cfg: FDConfig = GRAD_FD,
                guard: Callable[[np.ndarray], None] | None = None) -> np.ndarray:
    """Central-difference gradient ``(f(x + h e_j) - f(x - h e_j)) / 2h``."""
    x = np.asarray(x, dtype=float)
    h = cfg.steps(x)
    g = np.empty_like(x)
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h[j]
        xm[j] -= h[j]
        g[j] = (_call(f, xp, guard) - _call(f, xm, guard)) / (2.0 * h[j])
    return g


def fd_hessian(f: Callable[[np.ndarray], float], x, cfg: FDConfig = HESS_FD,
               guard: Callable[[np.ndarray], None] | None = None) -> np.ndarray:
    """Four-point central stencil for every pair ``(j, k)``, symmetrized."""
    x = np.asarray(x, dtype=float)
    d = x.size
    h = cfg.steps(x)
    H = np.empty((d, d))
    for j in range(d):
        for k in range(j, d):
            vals = []
            for sj, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                xp = x.copy()
                xp[j] += sj * h[j]
                xp[k] += sk * h[k]
                vals.append(_call(f, xp, guard))
            H[j, k] = H[k, j] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h[j] * h[k])
    return 0.5 * (H + H.T)


def sign_guard(inst: ProblemInstance, center, delta_min: float = DELTA_MIN):
    """Guard that rejects probes where some ``s_i`` flips sign or nears zero."""
    sign0 = np.sign(inst.A @ np.asarray(center, dtype=float) - inst.b)

    def guard(x):
        s = inst.A @ x - inst.b
        if np.any(np.sign(s) != sign0) or np.min(np.abs(s)) < delta_min:
            raise DomainCrossing("finite-difference probe crosses an s_i = 0 hyperplane")

    return guard


def sigma_direct(inst: ProblemInstance, x, delta_min: float = DELTA_MIN) -> np.ndarray:
    """Leverage matrix as ``U U^T`` with ``U`` an orthonormal basis of ``range(A(x))``."""
    x = np.asarray(x, dtype=float)
    s = inst.A @ x - inst.b
    k = int(np.argmin(np.abs(s)))
    if not abs(s[k]) >= delta_min:
        raise SingularScaling(k, s[k], delta_min)
    U, sv, _ = np.linalg.svd(inst.A / s[:, None], full_matrices=False)
    if sv[-1] < 1e-12 * sv[0]:
        raise RankDeficient(f"sigma_min(A(x)) = {sv[-1]:.3e}")
    return U @ U.T


def loss_exp_direct(inst: ProblemInstance) -> Callable[[np.ndarray], float]:
    """Leverage-mismatch loss evaluated through :func:`sigma_direct`."""

    def f(x):
        r = np.diag(sigma_direct(inst, x)) - inst.c
        return 0.5 * float(r @ r)

    return f


def sigma_ii_direct(inst: ProblemInstance, i: int) -> Callable[[np.ndarray], float]:
    def f(x):
        return float(sigma_direct(inst, x)[i, i])

    return f
