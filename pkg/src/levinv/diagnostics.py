"""Empirical checks of the norm, Lipschitz and running-time bounds.

Bounds are evaluated at a margin ``beta`` and radius ``R`` measured on the
points actually sampled:

* ``beta`` is the smallest value of ``min(sigma_min(A(x)), min_i |s_i(x)|)``
  over all sampled points (the bounds use both readings of the margin);
* ``R`` is ``max(||A||, max ||x||)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_chunks
from .errors import LevinvError
from .generator import GenConfig, gen_instance, stream
from .gradient import grad_loss_exp
from .hessian import hessian_loss_exp, stripped_d_terms
from .instance import ProblemInstance, RegConfig
from .leverage import LeverageSnapshot, snapshot

HESSIAN_LIPSCHITZ = 812.0  # times beta^-9 R^5
D_TERM_LIPSCHITZ = (48.0, 72.0, 72.0, 30.0, 96.0, 54.0)  # times beta^-7 R^3


def _ball_point(rng, center, radius):
    u = rng.standard_normal(center.size)
    u /= np.linalg.norm(u)
    return center + radius * rng.random() ** (1.0 / center.size) * u


def _same_branch(inst, center, y):
    s0 = inst.A @ center - inst.b
    s1 = inst.A @ y - inst.b
    return bool(np.all(np.sign(s0) == np.sign(s1)))


def sample_pairs(inst: ProblemInstance, center, radius: float, samples: int, seed: int,
                 retries: int = 20):
    """Valid snapshot pairs drawn uniformly from a ball around ``center``.

    Points on the other side of an ``s_i = 0`` hyperplane are redrawn, up
    to ``retries`` times per sample.
    """
    center = np.asarray(center, dtype=float)
    rng = stream(seed, 11)
    pairs = []
    budget = retries * samples
    while len(pairs) < samples:
        if budget <= 0:
            raise LevinvError(
                f"only {len(pairs)} of {samples} pairs were valid; shrink the radius")
        x = _ball_point(rng, center, radius)
        y = _ball_point(rng, center, radius)
        if not (_same_branch(inst, center, x) and _same_branch(inst, center, y)):
            budget -= 1
            continue
        try:
            pairs.append((snapshot(inst, x, True), snapshot(inst, y, True)))
        except LevinvError:
            budget -= 1
    return pairs


def measured_beta_R(inst: ProblemInstance, snaps) -> tuple[float, float]:
    beta = min(min(s.sigma_min_Ax, s.min_abs_s) for s in snaps)
    R = max(float(np.linalg.norm(inst.A, 2)), max(float(np.linalg.norm(s.x)) for s in snaps))
    return beta, R


@dataclass(frozen=True)
class LipschitzReport:
    pairs: int
    beta: float
    R: float
    max_ratio: float
    bound: float
    term_ratios: tuple[float, ...]
    term_bounds: tuple[float, ...]
    holds: bool
    term_holds: tuple[bool, ...]

    @property
    def gap(self) -> float:
        """How many times looser the bound is than the worst observed ratio."""
        return self.bound / self.max_ratio if self.max_ratio > 0 else float("inf")

    @property
    def term_gaps(self) -> tuple[float, ...]:
        return tuple(b / r if r > 0 else float("inf")
                     for r, b in zip(self.term_ratios, self.term_bounds))

    @property
    def all_hold(self) -> bool:
        return self.holds and all(self.term_holds)


def _term_ratio(sa: LeverageSnapshot, sb: LeverageSnapshot, dist: float) -> np.ndarray:
    best = np.zeros(6)
    for i in range(sa.n):
        Ta = stripped_d_terms(sa, i)
        Tb = stripped_d_terms(sb, i)
        for q in range(6):
            best[q] = max(best[q], np.linalg.norm(Ta[q] - Tb[q], 2) / dist)
    return best


def empirical_hessian_lipschitz(inst: ProblemInstance, reg: RegConfig, center, radius: float,
                                samples: int = 200, seed: int = 0, mode: str = "residual",
                                include_exp: bool = True, threads: int = 1) -> LipschitzReport:
    """Largest ``||H(x) - H(y)|| / ||x - y||`` over random pairs in a ball.

    The regularizer's Hessian is constant and cancels, so only the
    leverage term contributes; ``include_exp=False`` therefore gives 0.
    """
    pairs = sample_pairs(inst, center, radius, samples, seed)

    def work(block):
        out = []
        for k in block:
            sa, sb = pairs[k]
            dist = float(np.linalg.norm(sa.x - sb.x))
            if include_exp:
                dH = hessian_loss_exp(inst, sa, mode) - hessian_loss_exp(inst, sb, mode)
                ratio = np.linalg.norm(dH, 2) / dist
            else:
                ratio = 0.0
            out.append((ratio, _term_ratio(sa, sb, dist)))
        return out

    results = [r for part in map_chunks(work, len(pairs), threads, size=16) for r in part]
    max_ratio = max(r[0] for r in results)
    terms = np.max(np.vstack([r[1] for r in results]), axis=0)
    beta, R = measured_beta_R(inst, [s for p in pairs for s in p])
    bound = HESSIAN_LIPSCHITZ * beta**-9 * R**5
    tbounds = tuple(k * beta**-7 * R**3 for k in D_TERM_LIPSCHITZ)
    term_holds = tuple(bool(t <= b) for t, b in zip(terms, tbounds))
    return LipschitzReport(len(pairs), beta, R, float(max_ratio), bound,
                           tuple(float(t) for t in terms), tbounds,
                           bool(max_ratio <= bound), term_holds)


@dataclass(frozen=True)
class BasicLipschitzReport:
    pairs: int
    beta: float
    R: float
    ratios: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    @property
    def holds(self) -> dict:
        return {k: bool(self.ratios[k] <= self.bounds[k]) for k in self.ratios}

    @property
    def all_hold(self) -> bool:
        return all(self.holds.values())


BASIC_MAPS = ("S", "S_inv", "A_x", "A_x_pinv", "gram_inv", "sigma")


def basic_lipschitz_suite(inst: ProblemInstance, center, radius: float, samples: int = 200,
                          seed: int = 0) -> BasicLipschitzReport:
    """Lipschitz ratios of ``S``, ``S^{-1}``, ``A(x)``, ``A(x)^+``, the Gram
    inverse and the leverage matrix, against
    ``R, R/beta^2, R^2/beta^2, R^2/beta^4, 2 R^2/beta^5, 3 R^3/beta^7``."""
    pairs = sample_pairs(inst, center, radius, samples, seed)
    best = dict.fromkeys(BASIC_MAPS, 0.0)
    for sa, sb in pairs:
        dist = float(np.linalg.norm(sa.x - sb.x))
        diffs = {
            "S": np.max(np.abs(sa.s - sb.s)),
            "S_inv": np.max(np.abs(1.0 / sa.s - 1.0 / sb.s)),
            "A_x": np.linalg.norm(sa.Ax - sb.Ax, 2),
            "A_x_pinv": np.linalg.norm(np.linalg.pinv(sa.Ax) - np.linalg.pinv(sb.Ax), 2),
            "gram_inv": np.linalg.norm(sa.gram_inv - sb.gram_inv, 2),
            "sigma": np.linalg.norm(sa.sigma_full - sb.sigma_full, 2),
        }
        for k, v in diffs.items():
            best[k] = max(best[k], float(v) / dist)
    beta, R = measured_beta_R(inst, [s for p in pairs for s in p])
    bounds = {
        "S": R,
        "S_inv": R / beta**2,
        "A_x": R**2 / beta**2,
        "A_x_pinv": R**2 / beta**4,
        "gram_inv": 2.0 * R**2 / beta**5,
        "sigma": 3.0 * R**3 / beta**7,
    }
    return BasicLipschitzReport(len(pairs), beta, R, best, bounds)


@dataclass(frozen=True)
class NormBoundReport:
    beta: float
    sigma_norm: float
    max_abs_sigma_ii: float
    max_column_norm: float
    pinv_norm: float
    gram_inv_norm: float
    Ax_norm: float
    R: float
    hypothesis_met: bool
    checks: dict

    @property
    def all_hold(self) -> bool:
        return all(v for v in self.checks.values() if v is not None)


def norm_bound_suite(snap: LeverageSnapshot, beta: float, R: float | None = None,
                     tol: float = 1e-10) -> NormBoundReport:
    """Norm bounds on the leverage matrix and on ``A(x)``.

    The bounds on ``||A(x)^+||`` and the Gram inverse only apply when
    ``sigma_min(A(x)) >= beta``; otherwise they are reported as ``None``.
    The ``||a(x)_i|| <= beta R`` bound is recorded but never checked.
    """
    P = snap.sigma()
    sig_norm = float(np.linalg.norm(P, 2))
    max_ii = float(np.max(np.abs(np.diag(P))))
    col = float(np.max(np.linalg.norm(P, axis=0)))
    pinv = 1.0 / snap.sigma_min_Ax
    gnorm = float(np.linalg.norm(snap.gram_inv, 2))
    hyp = snap.sigma_min_Ax >= beta
    checks = {
        "sigma_norm<=1": sig_norm <= 1 + tol,
        "abs_sigma_ii<=1": max_ii <= 1 + tol,
        "column_norm<=1": col <= 1 + tol,
        "pinv<=1/beta": (pinv <= (1 + 1e-8) / beta) if hyp else None,
        "gram_inv<=1/beta^2": (gnorm <= (1 + 1e-8) / beta**2) if hyp else None,
    }
    return NormBoundReport(beta, sig_norm, max_ii, col, pinv, gnorm, snap.sigma_max_Ax,
                           float("nan") if R is None else R, bool(hyp), checks)


@dataclass(frozen=True)
class TimingRow:
    n: int
    d: int
    grad_ms: float
    hess_ms: float | None
    reps: int


@dataclass(frozen=True)
class ScalingReport:
    rows: tuple[TimingRow, ...]
    slope_n: dict
    slope_d: dict


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _time(fn, reps):
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        ts.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(ts))


def gradient_iteration(inst: ProblemInstance, x):
    """One gradient evaluation: snapshot with the full leverage matrix, then assembly."""
    snap = snapshot(inst, x, want_full=True)
    return grad_loss_exp(inst, snap)


def timing_bench(grid, reps: int = 3, seed: int = 0, hessian_max_n: int = 512) -> ScalingReport:
    """Median wall time per gradient (and Hessian) evaluation over a grid of ``(n, d)``.

    Slopes are log-log fits of gradient time against ``n`` for every ``d``
    with at least two sizes, and of Hessian time against ``d`` for every
    ``n`` with at least two Hessian timings.
    """
    grid = [(int(n), int(d)) for n, d in grid]
    if not grid:
        raise ValueError("empty grid")
    rows = []
    for n, d in grid:
        inst, _, truth = gen_instance(GenConfig(n, d, seed=seed))
        x = truth.x_star
        gradient_iteration(inst, x)
        g_ms = _time(lambda: gradient_iteration(inst, x), reps)
        h_ms = None
        if n <= hessian_max_n:
            snap = snapshot(inst, x, want_full=True)
            h_ms = _time(lambda: hessian_loss_exp(inst, snap), reps)
        rows.append(TimingRow(n, d, g_ms, h_ms, reps))
    slope_n, slope_d = {}, {}
    for d in sorted({r.d for r in rows}):
        sel = [r for r in rows if r.d == d]
        if len(sel) >= 2:
            slope_n[d] = loglog_slope([r.n for r in sel], [r.grad_ms for r in sel])
    for n in sorted({r.n for r in rows}):
        sel = [r for r in rows if r.n == n and r.hess_ms is not None]
        if len(sel) >= 2:
            slope_d[n] = loglog_slope([r.d for r in sel], [r.hess_ms for r in sel])
    return ScalingReport(tuple(rows), slope_n, slope_d)
