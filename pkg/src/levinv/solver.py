"""Gradient descent and Newton's method for the leverage inversion loss.

Both methods halve a step whenever it would move some ``s_i`` across zero
(or closer than ``delta_min`` to it); ``S(x)^{-1}`` is singular there and
the loss jumps between branches. Runs are recorded in a
:class:`TrackedRun`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (EmptyRun, InvalidStart, LevinvError, RankDeficient, SingularHessian,
                     SingularScaling, StepTrapped)
from .gradient import grad_loss_exp, grad_loss_reg
from .hessian import hessian_loss_exp, hessian_loss_reg
from .instance import ProblemInstance, RegConfig
from .leverage import DELTA_MIN, snapshot
from .objective import LossBreakdown, loss_exp, loss_reg

log = logging.getLogger(__name__)


class Objective:
    """Loss, gradient and Hessian of ``L_exp + L_reg`` at a point.

    ``include_exp=False`` drops the leverage term and leaves the plain
    quadratic regularizer (no domain restriction then applies).
    """

    def __init__(self, inst: ProblemInstance, reg: RegConfig, mode: str = "residual",
                 include_exp: bool = True, delta_min: float = DELTA_MIN, threads: int = 1):
        self.inst = inst
        self.reg = reg
        self.mode = mode
        self.include_exp = include_exp
        self.delta_min = delta_min
        self.threads = threads
        self._H_reg = hessian_loss_reg(inst, reg)

    def admissible(self, x_old, x_new) -> bool:
        if not self.include_exp:
            return bool(np.all(np.isfinite(x_new)))
        s_old = self.inst.A @ x_old - self.inst.b
        s_new = self.inst.A @ x_new - self.inst.b
        return bool(np.all(np.isfinite(s_new)) and np.all(np.sign(s_new) == np.sign(s_old))
                    and np.min(np.abs(s_new)) >= self.delta_min)

    def evaluate(self, x, order: int = 1):
        """Return ``(LossBreakdown, gradient, Hessian or None)``."""
        lr = loss_reg(self.inst, x, self.reg)
        g = grad_loss_reg(self.inst, x, self.reg)
        H = self._H_reg.copy() if order >= 2 else None
        le = 0.0
        res_norm = 0.0
        if self.include_exp:
            snap = snapshot(self.inst, x, want_full=True, delta_min=self.delta_min)
            le = loss_exp(self.inst, snap)
            res_norm = float(np.linalg.norm(snap.sigma_diag - self.inst.c))
            g = grad_loss_exp(self.inst, snap, threads=self.threads) + g
            if order >= 2:
                H = hessian_loss_exp(self.inst, snap, self.mode) + H
        return LossBreakdown(le, lr, le + lr, res_norm), g, H

    def loss(self, x) -> float:
        return self.evaluate(x, order=1)[0].loss_total


@dataclass
class TrackedRun:
    """Iterates and per-iteration records; row ``t`` describes ``x_t``.

    ``step_size[t]`` and ``halvings[t]`` describe the step that produced
    ``x_t`` (zero for ``t = 0``). ``r`` is filled when ``x_star`` is known.
    """

    method: str
    xs: list = field(default_factory=list)
    loss_exp: list = field(default_factory=list)
    loss_reg: list = field(default_factory=list)
    loss_total: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    step_size: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    time_ms: list = field(default_factory=list)
    r: list | None = None
    status: str = "running"
    message: str = ""
    shifts: int = 0

    def record(self, x, lb: LossBreakdown, gnorm, step, halvings, ms, x_star=None):
        self.xs.append(np.array(x, copy=True))
        self.loss_exp.append(lb.loss_exp)
        self.loss_reg.append(lb.loss_reg)
        self.loss_total.append(lb.loss_total)
        self.grad_norm.append(float(gnorm))
        self.step_size.append(float(step))
        self.halvings.append(int(halvings))
        self.time_ms.append(float(ms))
        if x_star is not None:
            if self.r is None:
                self.r = []
            self.r.append(float(np.linalg.norm(np.asarray(x) - x_star)))

    @property
    def x(self) -> np.ndarray:
        if not self.xs:
            raise EmptyRun("run has no iterates")
        return self.xs[-1]

    @property
    def iterations(self) -> int:
        return max(0, len(self.xs) - 1)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def rows(self):
        """Per-iteration dicts in the convergence-CSV column order."""
        for t in range(len(self.xs)):
            yield {
                "iter": t,
                "loss_exp": self.loss_exp[t],
                "loss_reg": self.loss_reg[t],
                "loss_total": self.loss_total[t],
                "grad_norm": self.grad_norm[t],
                "step_size": self.step_size[t],
                "halvings": self.halvings[t],
                "r_t": self.r[t] if self.r is not None else "",
                "time_ms": self.time_ms[t],
            }


@dataclass(frozen=True)
class GDConfig:
    """Fixed step ``eta`` or the schedule ``2 / (alpha (k + 1))``."""

    eta: float | None = None
    alpha: float | None = None
    max_iter: int = 1000
    tol: float = 1e-12
    halving_cap: int = 30

    def __post_init__(self):
        if (self.eta is None) == (self.alpha is None):
            raise ValueError("give exactly one of eta (fixed step) or alpha (schedule)")
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def step(self, k: int) -> float:
        if self.eta is not None:
            return self.eta
        return 2.0 / (self.alpha * (k + 1))


@dataclass(frozen=True)
class NewtonConfig:
    max_iter: int = 50
    tol: float = 1e-13
    halving_cap: int = 30
    shift_fallback: bool = True
    l: float | None = None
    M: float | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.halving_cap < 0:
            raise ValueError("halving_cap must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def _start(obj: Objective, x0, order):
    x0 = np.array(x0, dtype=float, copy=True)
    try:
        return x0, obj.evaluate(x0, order)
    except (SingularScaling, RankDeficient) as exc:
        raise InvalidStart(f"loss undefined at x0: {exc}") from exc


def _safeguarded(obj: Objective, x, direction, scale, cap, order):
    """Largest ``scale / 2^k`` (``k <= cap``) keeping the step admissible."""
    for k in range(cap + 1):
        t = scale / 2.0**k
        x_new = x - t * direction
        if obj.admissible(x, x_new):
            try:
                return x_new, t, k, obj.evaluate(x_new, order)
            except (SingularScaling, RankDeficient):
                continue
    return None


def gradient_descent(inst: ProblemInstance, reg: RegConfig, x0, cfg: GDConfig, *,
                     x_star=None, objective: Objective | None = None) -> TrackedRun:
    """``x_t = x_{t-1} - step_t * grad L(x_{t-1})`` with domain safeguarding."""
    obj = objective or Objective(inst, reg)
    x_star = None if x_star is None else np.asarray(x_star, dtype=float)
    run = TrackedRun("gd")
    t0 = time.perf_counter()
    x, (lb, g, _) = _start(obj, x0, 1)
    run.record(x, lb, np.linalg.norm(g), 0.0, 0, 0.0, x_star)
    for k in range(1, cfg.max_iter + 1):
        if np.linalg.norm(g) <= cfg.tol:
            run.status = "converged"
            run.message = "gradient norm below tolerance"
            return run
        tk = time.perf_counter()
        found = _safeguarded(obj, x, g, cfg.step(k), cfg.halving_cap, 1)
        if found is None:
            run.status = "trapped"
            run.message = f"step halving cap {cfg.halving_cap} exhausted at iteration {k}"
            raise StepTrapped(run.message, run)
        x, step, halv, (lb, g, _) = found
        run.record(x, lb, np.linalg.norm(g), step, halv,
                   (time.perf_counter() - tk) * 1e3, x_star)
    if np.linalg.norm(g) <= cfg.tol:
        run.status, run.message = "converged", "gradient norm below tolerance"
    else:
        run.status, run.message = "max_iter", f"iteration cap {cfg.max_iter} reached"
    log.debug("gd finished in %.1f ms", (time.perf_counter() - t0) * 1e3)
    return run


def _newton_direction(H, g, cfg: NewtonConfig, run: TrackedRun):
    try:
        return sla.cho_solve(sla.cho_factor(H), g)
    except (np.linalg.LinAlgError, ValueError):
        pass
    if not cfg.shift_fallback:
        raise SingularHessian("Hessian is not positive definite", run)
    mu = 1e-10 * np.linalg.norm(H, 2)
    log.warning("Hessian not positive definite; retrying with shift %.3e", mu)
    run.shifts += 1
    try:
        return sla.cho_solve(sla.cho_factor(H + mu * np.eye(H.shape[0])), g)
    except (np.linalg.LinAlgError, ValueError):
        raise SingularHessian(
            f"Hessian not positive definite even after shift {mu:.3e}", run) from None


def newton(inst: ProblemInstance, reg: RegConfig, x0, cfg: NewtonConfig = NewtonConfig(), *,
           x_star=None, objective: Objective | None = None) -> TrackedRun:
    """``x_{t+1} = x_t - H(x_t)^{-1} g(x_t)`` via Cholesky, with step halving."""
    obj = objective or Objective(inst, reg)
    x_star = None if x_star is None else np.asarray(x_star, dtype=float)
    run = TrackedRun("newton")
    x, (lb, g, H) = _start(obj, x0, 2)
    run.record(x, lb, np.linalg.norm(g), 0.0, 0, 0.0, x_star)
    if not np.any(g):
        run.status, run.message = "converged", "zero gradient at start"
        return run
    for k in range(1, cfg.max_iter + 1):
        tk = time.perf_counter()
        p = _newton_direction(H, g, cfg, run)
        found = _safeguarded(obj, x, p, 1.0, cfg.halving_cap, 2)
        if found is None:
            run.status = "trapped"
            run.message = f"step halving cap {cfg.halving_cap} exhausted at iteration {k}"
            raise StepTrapped(run.message, run)
        x_new, step, halv, (lb, g, H) = found
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        run.record(x, lb, np.linalg.norm(g), step, halv,
                   (time.perf_counter() - tk) * 1e3, x_star)
        if moved <= cfg.tol * (1.0 + np.linalg.norm(x)) or not np.any(g):
            run.status, run.message = "converged", "step norm below tolerance"
            return run
    run.status, run.message = "max_iter", f"iteration cap {cfg.max_iter} reached"
    return run


def averaged_iterate(run: TrackedRun, alpha: float, lipschitz: float | None = None):
    """Weighted average ``sum_k 2k / (T (T + 1)) x_k`` over ``x_1..x_T``.

    Returns ``(x_bar, bound)`` where ``bound = 2 l^2 / (alpha (T + 1))`` and
    ``l`` defaults to the largest gradient norm seen on the run.
    """
    T = run.iterations
    if T < 1:
        raise EmptyRun("need at least one step to average")
    k = np.arange(1, T + 1, dtype=float)
    wts = 2.0 * k / (T * (T + 1))
    x_bar = wts @ np.vstack(run.xs[1:])
    l = max(run.grad_norm) if lipschitz is None else lipschitz
    return x_bar, 2.0 * l * l / (alpha * (T + 1))


@dataclass(frozen=True)
class ContractionReport:
    r: np.ndarray
    ratios: np.ndarray
    good_index: int | None
    checked: np.ndarray
    max_ratio: float
    threshold: float
    holds: bool | None
    message: str


def contraction_report(run: TrackedRun, x_star, l: float, M: float, slack: float = 0.1,
                       floor: float | None = None) -> ContractionReport:
    """Distances ``r_t`` to ``x_star`` and the ratios ``r_{t+1} / r_t``.

    From the first ``t`` with ``M r_t <= 0.1 l`` on, every ratio should stay
    below ``0.4 + slack``. Ratios whose denominator is at rounding level
    (below ``floor``, default ``1e-13 (1 + ||x_star||)``) are not checked.
    """
    x_star = np.asarray(x_star, dtype=float)
    r = np.array([np.linalg.norm(x - x_star) for x in run.xs])
    if floor is None:
        floor = 1e-13 * (1.0 + np.linalg.norm(x_star))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(r[:-1] > 0, r[1:] / r[:-1], 0.0)
    threshold = 0.4 + slack
    good = np.flatnonzero(M * r <= 0.1 * l)
    if good.size == 0:
        return ContractionReport(r, ratios, None, np.array([], dtype=int), float("nan"),
                                 threshold, None, "condition never met")
    g0 = int(good[0])
    idx = np.array([t for t in range(g0, len(r) - 1) if r[t] > floor], dtype=int)
    mx = float(np.max(ratios[idx])) if idx.size else 0.0
    holds = bool(mx <= threshold)
    msg = (f"good point at t={g0}; max ratio {mx:.3g} over {idx.size} steps "
           f"({'<=' if holds else '>'} {threshold:g})")
    return ContractionReport(r, ratios, g0, idx, mx, threshold, holds, msg)


def estimate_smoothness(obj: Objective, x, radius: float = 0.0, samples: int = 0,
                        seed: int = 0) -> float:
    """Largest Hessian spectral norm at ``x`` and at random points of a ball."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 7]))
    x = np.asarray(x, dtype=float)
    best = np.linalg.norm(obj.evaluate(x, 2)[2], 2)
    for _ in range(samples):
        u = rng.standard_normal(x.size)
        y = x + radius * rng.random() ** (1.0 / x.size) * u / np.linalg.norm(u)
        if not obj.admissible(x, y):
            continue
        try:
            best = max(best, np.linalg.norm(obj.evaluate(y, 2)[2], 2))
        except LevinvError:
            continue
    return float(best)
