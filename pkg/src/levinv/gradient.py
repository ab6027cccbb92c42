"""First derivatives of leverage scores and of the loss.

With ``a = A(x)`` and ``P = sigma(x)``, the building block is

    d sigma_ii / dx = 2 a^T (P[:, i] ** 2) - 2 P[i, i] a[i]

which costs O(nd) per row once ``P`` is known. The entry, matrix and
column forms below are the same derivative viewed differently; they are
kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import map_chunks, tree_sum
from .instance import ProblemInstance, RegConfig
from .leverage import LeverageSnapshot, snapshot


def _check_row(snap, i):
    if not 0 <= i < snap.n:
        raise IndexError(f"row index {i} out of range for n={snap.n}")


def _check_col(snap, j):
    if not 0 <= j < snap.d:
        raise IndexError(f"column index {j} out of range for d={snap.d}")


def grad_sigma_diag_i(snap: LeverageSnapshot, i: int) -> np.ndarray:
    """Gradient of the ``i``-th leverage score with respect to ``x``."""
    _check_row(snap, i)
    col = snap.sigma_column(i)
    return 2.0 * (snap.Ax.T @ (col * col)) - 2.0 * snap.sigma_diag[i] * snap.Ax[i]


def grad_sigma_entry(snap: LeverageSnapshot, i: int, l: int, j: int) -> float:
    """Partial derivative of ``sigma_il`` with respect to ``x_j``."""
    _check_row(snap, i)
    _check_row(snap, l)
    _check_col(snap, j)
    ci = snap.sigma_column(i)
    cl = snap.sigma_column(l)
    a = snap.Ax[:, j]
    return float(2.0 * np.dot(ci * cl, a) - ci[l] * (a[i] + a[l]))


def grad_sigma_matrix(snap: LeverageSnapshot, j: int) -> np.ndarray:
    """Full derivative of the leverage matrix with respect to ``x_j``."""
    _check_col(snap, j)
    P = snap.sigma()
    a = snap.Ax[:, j]
    aP = a[:, None] * P
    return 2.0 * (P @ aP) - aP - aP.T


def grad_sigma_column(snap: LeverageSnapshot, i: int, j: int) -> np.ndarray:
    """Derivative of column ``i`` of the leverage matrix with respect to ``x_j``."""
    _check_row(snap, i)
    _check_col(snap, j)
    P = snap.sigma()
    a = snap.Ax[:, j]
    col = P[:, i]
    return 2.0 * (P @ (a * col)) - a * col - col * a[i]


def sigma_diag_jacobian(snap: LeverageSnapshot, rows=None) -> np.ndarray:
    """Rows are the gradients of the leverage scores (n x d, or len(rows) x d)."""
    P = snap.sigma()
    if rows is None:
        Q = P * P
        return 2.0 * (Q @ snap.Ax) - 2.0 * snap.sigma_diag[:, None] * snap.Ax
    rows = np.asarray(rows)
    Q = P[rows] ** 2
    return 2.0 * (Q @ snap.Ax) - 2.0 * snap.sigma_diag[rows, None] * snap.Ax[rows]


@dataclass(frozen=True, eq=False)
class GradientBundle:
    grad_exp: np.ndarray
    grad_reg: np.ndarray
    grad_total: np.ndarray


def grad_loss_exp(inst: ProblemInstance, snap: LeverageSnapshot,
                  threads: int = 1) -> np.ndarray:
    """Gradient of ``0.5 * sum (sigma_ii - c_i)^2``.

    ``threads > 1`` splits the rows into fixed chunks and reduces them
    pairwise; ``threads == 1`` is a single vectorized pass.
    """
    r = snap.sigma_diag - inst.c
    if threads <= 1:
        return sigma_diag_jacobian(snap).T @ r

    def part(block):
        idx = np.arange(block.start, block.stop)
        return sigma_diag_jacobian(snap, idx).T @ r[idx]

    return tree_sum(map_chunks(part, snap.n, threads))


def grad_loss_reg(inst: ProblemInstance, x, reg: RegConfig) -> np.ndarray:
    """``A^T W^2 A x``."""
    x = np.asarray(x, dtype=float)
    return inst.A.T @ (reg.w**2 * (inst.A @ x))


def grad_loss_total(inst: ProblemInstance, x, reg: RegConfig,
                    snap: LeverageSnapshot | None = None,
                    threads: int = 1) -> GradientBundle:
    if snap is None:
        snap = snapshot(inst, x, want_full=True)
    ge = grad_loss_exp(inst, snap, threads=threads)
    gr = grad_loss_reg(inst, x, reg)
    return GradientBundle(ge, gr, ge + gr)
