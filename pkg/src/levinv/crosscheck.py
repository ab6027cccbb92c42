"""Compare the analytic formulas with the oracles at a single point.

The gradient floor keeps the measure meaningful where the gradient
vanishes (``n = d`` makes the loss constant): there the finite-difference
value is pure rounding noise of size ``eps |f| / h``.

Error measures:

* ``sigma``: largest absolute entrywise difference from the SVD oracle;
* ``gradient``: ``||g - g_fd|| / max(||g_fd||, 1e-4)``;
* ``hessian``: ``max|H - H_fd| / (1 + max|H|)``;
* ``d_vs_c``: six-term row expansion against ``g g^T + sigma_ii hess(sigma_ii)``,
  as ``max|diff| / max(max|ref|, 1)``, worst row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainCrossing
from .generator import perturb_start
from .gradient import grad_loss_exp, grad_loss_reg, grad_sigma_diag_i
from .hessian import hessian_loss_exp, hessian_loss_reg, hessian_sigma_ii, hessian_terms
from .instance import ProblemInstance, RegConfig
from .leverage import snapshot
from .objective import loss_reg
from .oracle import GRAD_FD, HESS_FD, FDConfig, fd_gradient, fd_hessian, loss_exp_direct, \
    sigma_direct, sign_guard

THRESHOLDS = {"sigma": 1e-10, "gradient": 1e-6, "hessian": 1e-4, "d_vs_c": 1e-10}
GRAD_FLOOR = 1e-4


def rel_error(a, ref, floor: float = GRAD_FLOOR) -> float:
    a, ref = np.asarray(a, dtype=float), np.asarray(ref, dtype=float)
    return float(np.linalg.norm(a - ref) / max(float(np.linalg.norm(ref)), floor))


def max_error(a, ref, floor: float = 1.0) -> float:
    a, ref = np.asarray(a, dtype=float), np.asarray(ref, dtype=float)
    return float(np.max(np.abs(a - ref)) / max(float(np.max(np.abs(ref))), floor))


def hessian_error(H, H_fd) -> float:
    H, H_fd = np.asarray(H, dtype=float), np.asarray(H_fd, dtype=float)
    return float(np.max(np.abs(H - H_fd)) / (1.0 + np.max(np.abs(H))))


def _with_shrink(fd, f, x, cfg: FDConfig, guard, tries=3):
    # a probe that crosses s_i = 0 is retried with a ten times smaller step
    for k in range(tries):
        try:
            return fd(f, x, FDConfig(cfg.h / 10.0**k, cfg.relative), guard)
        except DomainCrossing:
            if k == tries - 1:
                raise


def d_vs_c_error(snap, rows=None) -> float:
    """Worst normalized gap between the two row-Hessian assemblies (``c = 0``)."""
    rows = range(snap.n) if rows is None else rows
    worst = 0.0
    for i in rows:
        g = grad_sigma_diag_i(snap, i)
        ref = np.outer(g, g) + snap.sigma_diag[i] * hessian_sigma_ii(snap, i)
        worst = max(worst, max_error(hessian_terms(snap, i, 0.0, "literal").total, ref))
    return worst


@dataclass(frozen=True)
class CheckResult:
    errors: dict
    thresholds: dict

    @property
    def failing(self) -> list[str]:
        return [k for k, v in self.errors.items() if not v <= self.thresholds[k]]

    @property
    def ok(self) -> bool:
        return not self.failing


def check_point(inst: ProblemInstance, reg: RegConfig, x, mode: str = "residual",
                formulas=("sigma", "gradient", "hessian", "d_vs_c"),
                grad_cfg: FDConfig = GRAD_FD, hess_cfg: FDConfig = HESS_FD) -> CheckResult:
    """Errors of each requested formula at ``x`` (``mode`` picks the Hessian multiplier)."""
    x = np.asarray(x, dtype=float)
    snap = snapshot(inst, x, want_full=True)
    direct = loss_exp_direct(inst)

    def f(y):
        return direct(y) + loss_reg(inst, y, reg)

    guard = sign_guard(inst, x)
    out = {}
    if "sigma" in formulas:
        out["sigma"] = float(np.max(np.abs(snap.sigma() - sigma_direct(inst, x))))
    if "gradient" in formulas:
        g = grad_loss_exp(inst, snap) + grad_loss_reg(inst, x, reg)
        out["gradient"] = rel_error(g, _with_shrink(fd_gradient, f, x, grad_cfg, guard))
    if "hessian" in formulas:
        H = hessian_loss_exp(inst, snap, mode) + hessian_loss_reg(inst, reg)
        out["hessian"] = hessian_error(H, _with_shrink(fd_hessian, f, x, hess_cfg, guard))
    if "d_vs_c" in formulas:
        out["d_vs_c"] = d_vs_c_error(snap)
    return CheckResult(out, {k: THRESHOLDS[k] for k in out})


def probe_point(inst: ProblemInstance, center, rho: float, seed: int,
                min_abs_s: float = 0.25, tries: int = 30) -> np.ndarray:
    """A point at distance ``rho`` from ``center`` keeping every ``|s_i| >= min_abs_s``.

    The radius is halved until the margin holds; ``center`` itself is
    returned if it never does.
    """
    center = np.asarray(center, dtype=float)
    for k in range(tries):
        x = perturb_start(center, rho / 2.0**k, seed)
        if np.min(np.abs(inst.A @ x - inst.b)) >= min_abs_s:
            return x
    return center.copy()
