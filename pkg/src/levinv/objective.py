"""Loss terms: leverage mismatch, regularization and their sum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import ProblemInstance, RegConfig
from .leverage import LeverageSnapshot, snapshot


@dataclass(frozen=True)
class LossBreakdown:
    loss_exp: float
    loss_reg: float
    loss_total: float
    frob_residual: float


def residual(inst: ProblemInstance, snap: LeverageSnapshot) -> np.ndarray:
    return snap.sigma_diag - inst.c


def loss_exp(inst: ProblemInstance, snap: LeverageSnapshot) -> float:
    """``0.5 * sum_i (sigma_ii(x) - c_i)^2``."""
    r = residual(inst, snap)
    return 0.5 * float(r @ r)


def loss_frobenius(inst: ProblemInstance, snap: LeverageSnapshot) -> float:
    """Unsquared residual ``||diag(c) - I o sigma(x)||_F``.

    Built from the n x n matrices on purpose, as an independent route to
    the same number that :func:`loss_exp` gets from the diagonal.
    """
    n = inst.n
    S = snap.sigma()
    return float(np.linalg.norm(np.diag(inst.c) - np.eye(n) * S, "fro"))


def loss_reg(inst: ProblemInstance, x, reg: RegConfig) -> float:
    """``0.5 * ||diag(w) A x||^2``."""
    v = reg.w * (inst.A @ np.asarray(x, dtype=float))
    return 0.5 * float(v @ v)


def loss_total(inst: ProblemInstance, x, reg: RegConfig,
               snap: LeverageSnapshot | None = None) -> LossBreakdown:
    if snap is None:
        snap = snapshot(inst, x)
    le = loss_exp(inst, snap)
    lr = loss_reg(inst, x, reg)
    return LossBreakdown(le, lr, le + lr, float(np.linalg.norm(residual(inst, snap))))
