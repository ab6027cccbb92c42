"""Acceptance criteria A1-A9.

Each test records one PASS/FAIL line (shown in the pytest terminal
summary) and then asserts. Run as a script to print the lines directly:

    python3 tests/test_acceptance.py
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from levinv.crosscheck import check_point, probe_point  # noqa: E402
from levinv.diagnostics import empirical_hessian_lipschitz, timing_bench  # noqa: E402
from levinv.generator import GenConfig, gen_instance, perturb_start  # noqa: E402
from levinv.hessian import D_TERM_BOUNDS, hessian_loss_exp, hessian_loss_reg, stripped_d_terms  # noqa: E402
from levinv.instance import RegConfig  # noqa: E402
from levinv.leverage import snapshot  # noqa: E402
from levinv.objective import loss_exp, loss_frobenius  # noqa: E402
from levinv.oracle import sigma_direct  # noqa: E402
from levinv.solver import (GDConfig, NewtonConfig, Objective, contraction_report,  # noqa: E402
                           estimate_smoothness, gradient_descent, newton)

LINES = []


def record(code, ok, detail):
    line = f"{code} {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return ok


def derivative_cases():
    """100 instances, n in [5, 40], d in [1, 8]; odd seeds carry a regularizer."""
    cases = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 41))
        d = int(rng.integers(1, min(8, n) + 1))
        inst, reg, truth = gen_instance(GenConfig(n, d, seed=seed, noise=0.05))
        if seed % 2:
            smin = np.linalg.svd(inst.A, compute_uv=False)[-1]
            reg = RegConfig(np.full(n, np.sqrt(0.1) / smin), l=0.1)
        x = probe_point(inst, truth.x_star, 0.1 * (1 + np.linalg.norm(truth.x_star)), seed)
        cases.append((inst, reg, x))
    return cases


def recovery_cases():
    """20 pure instances, n = 20, d = 4, margin 0.5, start radius 1e-2 (1 + ||x*||)."""
    out = []
    for seed in range(20):
        inst, reg, truth = gen_instance(GenConfig(20, 4, seed=seed, margin=0.5))
        rho = 1e-2 * (1 + np.linalg.norm(truth.x_star))
        out.append((inst, reg, truth, rho, perturb_start(truth.x_star, rho, seed)))
    return out


def test_a1_gradient():
    t0 = time.perf_counter()
    worst = max(check_point(i, r, x, formulas=("gradient",)).errors["gradient"]
                for i, r, x in derivative_cases())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt <= 30
    record("A1", ok, f"gradient vs central FD: max rel err {worst:.2e} <= 1e-6; "
                     f"100 instances in {dt:.1f} s <= 30 s")
    assert ok


def test_a2_hessian():
    worst_h = worst_dc = 0.0
    for inst, reg, x in derivative_cases():
        e = check_point(inst, reg, x, formulas=("hessian", "d_vs_c")).errors
        worst_h = max(worst_h, e["hessian"])
        worst_dc = max(worst_dc, e["d_vs_c"])
    ok = worst_h <= 1e-4 and worst_dc <= 1e-10
    record("A2", ok, f"residual-mode Hessian vs FD: max normalized err {worst_h:.2e} <= 1e-4; "
                     f"six-term vs five-term identity {worst_dc:.2e} <= 1e-10")
    assert ok


def test_a3_projection():
    idem = trace = oracle = 0.0
    lo, hi = np.inf, -np.inf
    for inst, _, x in derivative_cases():
        snap = snapshot(inst, x, want_full=True)
        P = snap.sigma_full
        idem = max(idem, np.linalg.norm(P @ P - P) / inst.n)
        trace = max(trace, abs(np.trace(P) - inst.d))
        lo, hi = min(lo, P.diagonal().min()), max(hi, P.diagonal().max())
        oracle = max(oracle, np.max(np.abs(P - sigma_direct(inst, x))))
    ok = idem <= 1e-8 and trace <= 1e-8 and lo >= -1e-12 and hi <= 1 + 1e-12 and oracle <= 1e-10
    record("A3", ok, f"||P^2-P||_F/n {idem:.1e} <= 1e-8; |tr P - d| {trace:.1e} <= 1e-8; "
                     f"diag in [{lo:.3g}, {hi:.3g}]; oracle gap {oracle:.1e} <= 1e-10")
    assert ok


def test_a4_newton_contraction():
    t0 = time.perf_counter()
    worst_ratio, worst_r, most_iter, unmet = 0.0, 0.0, 0, 0
    for seed, (inst, reg, truth, rho, x0) in enumerate(recovery_cases()):
        obj = Objective(inst, reg)
        l = float(np.linalg.eigvalsh(obj.evaluate(truth.x_star, 2)[2])[0])
        M = empirical_hessian_lipschitz(inst, reg, truth.x_star, rho, samples=20,
                                        seed=seed).max_ratio
        run = newton(inst, reg, x0, NewtonConfig(max_iter=15), x_star=truth.x_star, objective=obj)
        rep = contraction_report(run, truth.x_star, l, M)
        if rep.holds is None:
            unmet += 1
        else:
            worst_ratio = max(worst_ratio, rep.max_ratio)
        worst_r = max(worst_r, run.r[-1])
        most_iter = max(most_iter, run.iterations)
    dt = time.perf_counter() - t0
    ok = unmet == 0 and worst_ratio <= 0.5 and worst_r <= 1e-10 and most_iter <= 15 and dt <= 10
    record("A4", ok, f"post-good-point max ratio {worst_ratio:.2e} <= 0.5 "
                     f"({unmet} runs never good); final r {worst_r:.1e} <= 1e-10 "
                     f"in <= {most_iter} <= 15 iterations; {dt:.1f} s <= 10 s")
    assert ok


def test_a5_gradient_descent():
    rises, worst_final = 0, 0.0
    for seed, (inst, reg, truth, rho, x0) in enumerate(recovery_cases()):
        obj = Objective(inst, reg)
        eta = 1.0 / estimate_smoothness(obj, x0, rho, 20, seed)
        run = gradient_descent(inst, reg, x0, GDConfig(eta=eta, max_iter=1000), objective=obj)
        rises += int(np.sum(np.diff(run.loss_total) > 0))
        worst_final = max(worst_final, run.loss_exp[-1])
    ok = rises == 0 and worst_final <= 1e-4
    record("A5", ok, f"gd with eta = 1/L_hat: {rises} loss increases (need 0); "
                     f"final L_exp {worst_final:.1e} <= 1e-4")
    assert ok


def test_a6_psd_certificate():
    worst_reg, worst_gn = np.inf, np.inf
    l = 1e-3
    for inst, _, truth, _, _ in recovery_cases():
        smin = np.linalg.svd(inst.A, compute_uv=False)[-1]
        reg = RegConfig(np.full(inst.n, np.sqrt(l) / smin), l=l)
        worst_reg = min(worst_reg, np.linalg.eigvalsh(hessian_loss_reg(inst, reg))[0] - l)
        H = hessian_loss_exp(inst, snapshot(inst, truth.x_star, want_full=True))
        worst_gn = min(worst_gn, np.linalg.eigvalsh(H)[0])
    ok = worst_reg >= -1e-12 and worst_gn >= -1e-10
    record("A6", ok, f"min lambda(H_reg) - l = {worst_reg:.1e} >= -1e-12; "
                     f"min lambda(H_exp at x*) = {worst_gn:.1e} >= -1e-10")
    assert ok


def test_a7_bounds():
    worst = np.zeros(6)
    for inst, _, x in derivative_cases():
        snap = snapshot(inst, x, want_full=True)
        for i in range(inst.n):
            for q, D in enumerate(stripped_d_terms(snap, i)):
                worst[q] = max(worst[q], np.linalg.norm(D, 2))
    norms_ok = bool(np.all(worst <= np.array(D_TERM_BOUNDS) + 1e-9))
    lips, gaps = True, []
    for seed in range(5):
        inst, reg, truth = gen_instance(GenConfig(10, 3, seed=seed))
        rep = empirical_hessian_lipschitz(inst, reg, truth.x_star, 0.1, samples=200, seed=seed)
        lips &= rep.all_hold
        gaps.append(min((rep.gap,) + rep.term_gaps))
    ok = norms_ok and lips
    record("A7", ok, "stripped D norms " + "/".join(f"{v:.2f}" for v in worst)
           + " <= 4/8/8/10/8/6; Lipschitz inequalities "
           + ("hold" if lips else "FAIL") + f" on 5 instances, tightest gap {min(gaps):.1e}x")
    assert ok


def test_a8_complexity():
    t0 = time.perf_counter()
    rep = timing_bench([(n, 8) for n in (256, 512, 1024, 2048)], reps=3, hessian_max_n=0)
    dt = time.perf_counter() - t0
    slope = rep.slope_n[8]
    ok = slope <= 2.4 and dt <= 300
    record("A8", ok, f"gradient time vs n at d = 8: log-log slope {slope:.2f} <= 2.4; "
                     f"{dt:.1f} s <= 300 s")
    assert ok


def test_a9_objective_equivalence():
    worst = 0.0
    points = [(i, x) for i, _, x in derivative_cases()]
    points += [(inst, x0) for inst, _, _, _, x0 in recovery_cases()]
    for inst, x in points:
        snap = snapshot(inst, x, want_full=True)
        le = loss_exp(inst, snap)
        if le > 0:
            worst = max(worst, abs(le - 0.5 * loss_frobenius(inst, snap) ** 2) / le)
    ok = worst <= 1e-12
    record("A9", ok, f"loss_exp vs 0.5 frobenius^2: max rel gap {worst:.1e} <= 1e-12 "
                     f"on {len(points)} points")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
