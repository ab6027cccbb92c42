"""Second derivatives of the leverage loss.

Per row ``i`` the Hessian contribution of ``0.5 (sigma_ii - c_i)^2`` is

    H_i = g_i g_i^T + m_i * hess(sigma_ii)

with ``g_i`` the gradient of ``sigma_ii``. The chain rule gives the
curvature multiplier ``m_i = sigma_ii - c_i`` ("residual" mode). The
six-term expansion written out with ``m_i = sigma_ii`` is available as
``"literal"`` mode; it agrees with ``g g^T + sigma_ii hess(sigma_ii)``
but is not the Hessian of the loss unless ``c = 0``.

Notation: ``a = A(x)``, ``P = sigma(x)``, ``v_i = P[:, i] ** 2`` and
``u_i = a^T v_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import map_chunks, tree_sum
from .gradient import sigma_diag_jacobian
from .instance import ProblemInstance, RegConfig
from .leverage import LeverageSnapshot, snapshot

MODES = ("residual", "literal")

# spectral-norm bounds for the stripped terms D_1..D_6
D_TERM_BOUNDS = (4.0, 8.0, 8.0, 10.0, 8.0, 6.0)


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _multiplier(inst, snap, mode):
    if mode == "residual":
        return snap.sigma_diag - inst.c
    return snap.sigma_diag.copy()


def _sym(M):
    return 0.5 * (M + M.T)


def hessian_sigma_ii(snap: LeverageSnapshot, i: int) -> np.ndarray:
    """Hessian of the ``i``-th leverage score (sum of the five C terms)."""
    if not 0 <= i < snap.n:
        raise IndexError(f"row index {i} out of range for n={snap.n}")
    P = snap.sigma()
    a = snap.Ax
    p = P[:, i]
    v = p * p
    u = a.T @ v
    ai = a[i]
    ap = a * p[:, None]
    c1 = 8.0 * (ap.T @ P @ ap)
    c2 = -6.0 * (a.T @ (v[:, None] * a))
    c34 = -4.0 * (np.outer(ai, u) + np.outer(u, ai))
    c5 = 6.0 * P[i, i] * np.outer(ai, ai)
    return _sym(c1 + c2 + c34 + c5)


@dataclass(frozen=True, eq=False)
class HessianTerms:
    """The six matrices whose sum is the row-``i`` Hessian contribution."""

    i: int
    D: tuple[np.ndarray, ...]
    mode: str

    @property
    def total(self) -> np.ndarray:
        return sum(self.D[1:], self.D[0].copy())


def hessian_terms(snap: LeverageSnapshot, i: int, c_i: float = 0.0,
                  mode: str = "residual") -> HessianTerms:
    """Six-term decomposition of the row-``i`` Hessian contribution.

    In literal mode the multiplier is ``sigma_ii`` and the coefficients are
    the familiar -8, -8, 10, 8, -6; in residual mode ``m = sigma_ii - c_i``
    replaces ``sigma_ii`` wherever it came from the curvature part.
    """
    _check_mode(mode)
    if not 0 <= i < snap.n:
        raise IndexError(f"row index {i} out of range for n={snap.n}")
    P = snap.sigma()
    a = snap.Ax
    p = P[:, i]
    v = p * p
    u = a.T @ v
    ai = a[i]
    s_ii = P[i, i]
    m = s_ii - c_i if mode == "residual" else s_ii
    ap = a * p[:, None]

    D1 = 4.0 * np.outer(u, u)
    D2 = -4.0 * (s_ii + m) * np.outer(ai, u)
    D3 = D2.T.copy()
    D4 = (4.0 * s_ii * s_ii + 6.0 * s_ii * m) * np.outer(ai, ai)
    D5 = 8.0 * m * _sym(ap.T @ P @ ap)
    D6 = -6.0 * m * (a.T @ (v[:, None] * a))
    return HessianTerms(i, (D1, D2, D3, D4, D5, D6), mode)


def middle_matrix(inst: ProblemInstance, snap: LeverageSnapshot,
                  mode: str = "residual") -> np.ndarray:
    """n x n matrix ``M`` with ``hess(L_exp) = A(x)^T M A(x)``.

    Summing the six terms over all rows collapses to
    ``4 Q^2 - 4 (diag(t) Q + Q diag(t)) + diag(4 s^2 + 6 s m)
    + 8 P o (P diag(m) P) - 6 diag(Q m)`` with ``Q = P o P``,
    ``s`` the leverage scores and ``t = s + m``.
    """
    _check_mode(mode)
    P = snap.sigma()
    s = snap.sigma_diag
    m = _multiplier(inst, snap, mode)
    Q = P * P
    t = s + m
    M = 4.0 * (Q @ Q)
    tQ = t[:, None] * Q
    M -= 4.0 * (tQ + tQ.T)
    M += 8.0 * P * ((P * m) @ P)
    M[np.diag_indices_from(M)] += 4.0 * s * s + 6.0 * s * m - 6.0 * (Q @ m)
    return _sym(M)


def hessian_loss_exp(inst: ProblemInstance, snap: LeverageSnapshot,
                     mode: str = "residual", method: str = "vectorized",
                     threads: int = 1) -> np.ndarray:
    """Hessian of the leverage-mismatch loss summed over all rows.

    ``method="rows"`` sums the per-row six-term matrices in fixed chunks
    (optionally threaded); ``"vectorized"`` uses :func:`middle_matrix`.
    """
    _check_mode(mode)
    if method == "vectorized":
        a = snap.Ax
        return _sym(a.T @ middle_matrix(inst, snap, mode) @ a)
    if method != "rows":
        raise ValueError(f"unknown method {method!r}")
    snap = snap.with_full()

    def part(block):
        acc = np.zeros((snap.d, snap.d))
        for i in block:
            acc += hessian_terms(snap, i, inst.c[i], mode).total
        return acc

    return _sym(tree_sum(map_chunks(part, snap.n, threads)))


def gauss_newton(snap: LeverageSnapshot) -> np.ndarray:
    J = sigma_diag_jacobian(snap)
    return J.T @ J


def hessian_loss_reg(inst: ProblemInstance, reg: RegConfig) -> np.ndarray:
    """``A^T W^2 A`` (constant in ``x``)."""
    return _sym(inst.A.T @ (reg.w[:, None] ** 2 * inst.A))


@dataclass(frozen=True, eq=False)
class HessianBundle:
    H_exp: np.ndarray
    H_reg: np.ndarray
    H_total: np.ndarray
    mode: str
    min_eigenvalue: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.H_total, 2))


def min_eigenvalue(H: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(H)[0])


def make_bundle(H_exp, H_reg, mode) -> HessianBundle:
    H = _sym(H_exp + H_reg)
    return HessianBundle(H_exp, H_reg, H, mode, min_eigenvalue(H))


def hessian_total(inst: ProblemInstance, x, reg: RegConfig, mode: str = "residual",
                  snap: LeverageSnapshot | None = None, **kw) -> HessianBundle:
    if snap is None:
        snap = snapshot(inst, x, want_full=True)
    return make_bundle(hessian_loss_exp(inst, snap, mode, **kw), hessian_loss_reg(inst, reg), mode)


@dataclass(frozen=True)
class Certificate:
    passed: bool
    min_eigenvalue: float
    target: float
    margin: float
    tolerance: float


def pd_certificate(bundle: HessianBundle, l: float) -> Certificate:
    """Check ``H >= l I`` up to ``1e-10 ||H||``."""
    tol = 1e-10 * bundle.norm
    lam = bundle.min_eigenvalue
    return Certificate(bool(lam >= l - tol), lam, float(l), lam - l, tol)


def stripped_d_terms(snap: LeverageSnapshot, i: int) -> tuple[np.ndarray, ...]:
    """The six middle factors of the row-``i`` terms with ``A(x)`` removed.

    Shapes differ (n x n, 1 x n, n x 1, 1 x 1, n x n, n x n) because the
    outer factors differ; only their spectral norms are compared.
    """
    P = snap.sigma()
    p = P[:, i]
    v = p * p
    s_ii = P[i, i]
    return (
        4.0 * np.outer(v, v),
        -8.0 * s_ii * v[None, :],
        -8.0 * s_ii * v[:, None],
        np.array([[10.0 * s_ii * s_ii]]),
        8.0 * s_ii * (p[:, None] * P * p[None, :]),
        -6.0 * s_ii * np.diag(v),
    )


@dataclass(frozen=True)
class DTermReport:
    i: int
    norms: tuple[float, ...]
    bounds: tuple[float, ...]
    within: tuple[bool, ...]
    G_norm: float
    G_bound: float | None

    @property
    def all_within(self) -> bool:
        return all(self.within)

    @property
    def G_within(self) -> bool | None:
        return None if self.G_bound is None else self.G_norm <= self.G_bound


def d_term_spectral_report(snap: LeverageSnapshot, i: int, inst: ProblemInstance | None = None,
                           beta: float | None = None, mode: str = "literal",
                           slack: float = 1e-9) -> DTermReport:
    """Spectral norms of the stripped terms against ``{4, 8, 8, 10, 8, 6}``.

    ``G_norm`` is ``||S^{-1} M S^{-1}||`` with ``M`` the summed middle matrix,
    i.e. the matrix with ``hess(L_exp) = A^T G A``; it is reported next to
    ``44 beta`` and never asserted. It needs ``inst`` (for ``c``); without
    it ``G_norm`` is NaN.
    """
    terms = stripped_d_terms(snap, i)
    norms = tuple(float(np.linalg.norm(T, 2)) for T in terms)
    within = tuple(nv <= bd + slack for nv, bd in zip(norms, D_TERM_BOUNDS))
    if inst is not None:
        sinv = 1.0 / snap.s
        G = sinv[:, None] * middle_matrix(inst, snap, mode) * sinv[None, :]
        g_norm = float(np.linalg.norm(G, 2))
    else:
        g_norm = float("nan")
    return DTermReport(i, norms, D_TERM_BOUNDS, within, g_norm,
                       None if beta is None else 44.0 * beta)
