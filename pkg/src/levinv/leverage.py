"""Leverage scores of the rescaled matrix A(x) = diag(Ax - b)^{-1} A.

Everything here is a pure function of ``(inst, x)``. The Gram inverse
``(A(x)^T A(x))^{-1}`` is formed from a column-pivoted QR factor of
``A(x)`` and reused by the derivative code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import RankDeficient, SingularScaling
from .instance import ProblemInstance

DELTA_MIN = 1e-12
RANK_RTOL = 1e-12


def _as_point(inst: ProblemInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.d,):
        raise ValueError(f"x must have shape ({inst.d},), got {x.shape}")
    return x


def eval_s(inst: ProblemInstance, x) -> np.ndarray:
    """Return ``s(x) = A x - b``."""
    x = _as_point(inst, x)
    return inst.A @ x - inst.b


def check_scaling(s: np.ndarray, delta_min: float = DELTA_MIN) -> None:
    a = np.abs(s)
    i = int(np.argmin(a))
    if not a[i] >= delta_min:
        raise SingularScaling(i, s[i], delta_min)


def eval_A_of_x(inst: ProblemInstance, x, delta_min: float = DELTA_MIN) -> np.ndarray:
    """Return ``A(x) = S(x)^{-1} A`` (row ``i`` divided by ``s_i``)."""
    s = eval_s(inst, x)
    check_scaling(s, delta_min)
    return inst.A / s[:, None]


def _gram_inverse(Ax: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram inverse and singular values of ``Ax`` via pivoted QR."""
    _, R, piv = sla.qr(Ax, mode="economic", pivoting=True)
    sv = sla.svdvals(R)
    if sv[-1] < RANK_RTOL * sv[0] or sv[0] == 0:
        raise RankDeficient(
            f"sigma_min(A(x)) = {sv[-1]:.3e} below {RANK_RTOL:g} * sigma_max = {sv[0]:.3e}"
        )
    d = R.shape[1]
    Rinv = sla.solve_triangular(R, np.eye(d))
    G = np.empty((d, d))
    G[np.ix_(piv, piv)] = Rinv @ Rinv.T
    return 0.5 * (G + G.T), sv


@dataclass(frozen=True, eq=False)
class LeverageSnapshot:
    """Cached quantities at a single point ``x``."""

    x: np.ndarray
    s: np.ndarray
    Ax: np.ndarray
    gram_inv: np.ndarray
    sigma_diag: np.ndarray
    sigma_full: np.ndarray | None
    min_abs_s: float
    sigma_min_Ax: float
    sigma_max_Ax: float

    @property
    def n(self) -> int:
        return self.Ax.shape[0]

    @property
    def d(self) -> int:
        return self.Ax.shape[1]

    def sigma(self) -> np.ndarray:
        """Full leverage matrix, computed on demand if it was not cached."""
        if self.sigma_full is not None:
            return self.sigma_full
        return _sigma_from_gram(self.Ax, self.gram_inv)

    def sigma_column(self, i: int) -> np.ndarray:
        if self.sigma_full is not None:
            return self.sigma_full[:, i]
        return self.Ax @ (self.gram_inv @ self.Ax[i])

    def with_full(self) -> "LeverageSnapshot":
        if self.sigma_full is not None:
            return self
        return LeverageSnapshot(
            self.x, self.s, self.Ax, self.gram_inv, self.sigma_diag, self.sigma(),
            self.min_abs_s, self.sigma_min_Ax, self.sigma_max_Ax,
        )


def _sigma_from_gram(Ax, G):
    # symmetric to rounding; an explicit (S + S^T) / 2 costs more than the product at large n
    return (Ax @ G) @ Ax.T


def snapshot(inst: ProblemInstance, x, want_full: bool = False,
             delta_min: float = DELTA_MIN) -> LeverageSnapshot:
    x = np.array(_as_point(inst, x), copy=True)
    s = inst.A @ x - inst.b
    check_scaling(s, delta_min)
    Ax = inst.A / s[:, None]
    G, sv = _gram_inverse(Ax)
    # row-wise a_i^T G a_i without forming the n x n matrix
    diag = np.einsum("ij,jk,ik->i", Ax, G, Ax)
    full = _sigma_from_gram(Ax, G) if want_full else None
    for arr in (x, s, Ax, G, diag) + ((full,) if full is not None else ()):
        arr.setflags(write=False)
    return LeverageSnapshot(
        x, s, Ax, G, diag, full, float(np.min(np.abs(s))), float(sv[-1]), float(sv[0])
    )


def eval_sigma_full(inst: ProblemInstance, x) -> np.ndarray:
    """Leverage matrix ``A(x) (A(x)^T A(x))^{-1} A(x)^T``."""
    return snapshot(inst, x, want_full=True).sigma_full


def eval_sigma_diag(inst: ProblemInstance, x) -> np.ndarray:
    """Leverage scores (diagonal of the leverage matrix)."""
    return snapshot(inst, x).sigma_diag


def eval_Q(snap: LeverageSnapshot) -> np.ndarray:
    """Entrywise square of the leverage matrix."""
    S = snap.sigma()
    return S * S


@dataclass(frozen=True)
class WellPosedness:
    min_abs_s: float
    argmin_s: int
    sigma_min_Ax: float
    norm_Ax: float
    sigma_min_A: float
    rank_A: int
    beta: float
    delta_min: float

    @property
    def s_ok(self) -> bool:
        return self.min_abs_s >= self.delta_min

    @property
    def beta_ok(self) -> bool:
        return self.s_ok and self.sigma_min_Ax >= self.beta

    @property
    def s_margin_ok(self) -> bool:
        """Whether every ``|s_i| >= beta`` (the alternative reading of the margin)."""
        return self.min_abs_s >= self.beta

    @property
    def ok(self) -> bool:
        return self.s_ok and self.beta_ok


def well_posedness(inst: ProblemInstance, x, beta: float,
                   delta_min: float = DELTA_MIN) -> WellPosedness:
    """Report the margins the analysis assumes; never raises on bad points."""
    s = eval_s(inst, x)
    a = np.abs(s)
    k = int(np.argmin(a))
    svA = np.linalg.svd(inst.A, compute_uv=False)
    rank = int(np.sum(svA > 1e-10 * svA[0])) if svA[0] > 0 else 0
    if a[k] >= delta_min:
        sv = np.linalg.svd(inst.A / s[:, None], compute_uv=False)
        smin, smax = float(sv[-1]), float(sv[0])
    else:
        smin, smax = float("nan"), float("nan")
    return WellPosedness(float(a[k]), k, smin, smax, float(svA[-1]), rank, float(beta),
                         float(delta_min))
