"""Command-line entry point: ``levinv {gen,solve,verify,diag,bench}``.

Every command prints a JSON run manifest to stdout (and to ``--manifest``
if given); results go to CSV files. Exit codes:

    0  success
    2  usage error, or an unreadable or unusable input file
    3  instance generation failed
    4  iteration cap reached before the tolerance
    5  the solver could not take a step (halving cap, singular Hessian)
    6  a verification threshold or a checked inequality failed
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import ENV_VAR, resolve_threads
from .crosscheck import THRESHOLDS, check_point, probe_point
from .diagnostics import (basic_lipschitz_suite, empirical_hessian_lipschitz, norm_bound_suite,
                          timing_bench)
from .errors import InstanceFormatError, InvalidStart, LevinvError, SingularHessian, StepTrapped
from .generator import GenConfig, format_truth, gen_instance, parse_truth, perturb_start
from .hessian import D_TERM_BOUNDS, stripped_d_terms
from .instance import RegConfig, format_instance, load_instance, validate
from .leverage import snapshot
from .solver import GDConfig, NewtonConfig, Objective, estimate_smoothness, gradient_descent, \
    newton

EXIT_OK, EXIT_USAGE, EXIT_GEN, EXIT_CAP, EXIT_TRAPPED, EXIT_CHECK = 0, 2, 3, 4, 5, 6

CONVERGENCE_COLUMNS = ("iter", "loss_exp", "loss_reg", "loss_total", "grad_norm", "step_size",
                       "halvings", "r_t", "time_ms")

EXIT_HELP = """exit codes:
  0  success
  2  usage error, or an unreadable or unusable input file
  3  instance generation failed
  4  iteration cap reached before the tolerance
  5  the solver could not take a step
  6  a verification threshold or a checked inequality failed"""

HESSIAN_MODES = {"residual": "residual", "paper-literal": "literal"}



class UsageError(Exception):
    pass


def _error(command, message):
    print(f"levinv {command}: error: {message}", file=sys.stderr)


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])


def _load(path):
    try:
        return load_instance(path)
    except (OSError, InstanceFormatError, ValueError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from exc


def _load_truth(path):
    if path is None:
        return None
    try:
        return parse_truth(Path(path).read_text(encoding="utf-8"))
    except (OSError, InstanceFormatError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read ground truth {path}: {exc}") from exc


def _reg_for(inst, truth):
    if truth is None:
        return RegConfig.zero(inst.n)
    if truth.reg.w.size != inst.n or truth.x_star.size != inst.d:
        raise UsageError("ground truth does not match the instance dimensions")
    return truth.reg


def truth_path_for(out: Path) -> Path:
    return out.with_name(out.stem + ".truth" + (out.suffix or ".txt"))


# --- gen ---------------------------------------------------------------------

def cmd_gen(args, summary, outputs):
    try:
        cfg = GenConfig(args.n, args.d, seed=args.seed, margin=args.margin, mode=args.mode,
                        l=args.l, beta=args.beta, noise=args.noise)
        if args.mode == "regularized" and not (0 < args.beta < 0.1 and args.l > 0):
            raise ValueError("regularized mode needs l > 0 and beta in (0, 0.1)")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        inst, reg, truth = gen_instance(cfg)
    except (RuntimeError, LevinvError, np.linalg.LinAlgError) as exc:
        _error("gen", f"generation failed: {exc}")
        return EXIT_GEN
    report = validate(inst)
    if not report.ok:
        _error("gen", "generated instance is invalid: " + "; ".join(report.errors))
        return EXIT_GEN
    out = Path(args.out or f"levinv_n{args.n}_d{args.d}_seed{args.seed}.txt")
    tpath = Path(args.truth_out) if args.truth_out else truth_path_for(out)
    out.write_text(format_instance(inst, comment=f"levinv gen seed={args.seed}"), encoding="utf-8")
    tpath.write_text(format_truth(truth), encoding="utf-8")
    outputs += [str(out), str(tpath)]
    summary.update(n=inst.n, d=inst.d, mode=truth.mode, reg_l=reg.l, reg_beta=reg.beta,
                   reg_w2=float(reg.w[0] ** 2) if reg.w.size else 0.0,
                   min_abs_s_star=float(np.min(np.abs(truth.s_star))),
                   sigma_min_A=truth.sigma_min_A, warnings=list(report.warnings))
    return EXIT_OK


# --- solve -------------------------------------------------------------------

def _start_point(args, inst, truth):
    if args.x0 is not None:
        x0 = np.asarray(args.x0, dtype=float)
        if x0.size != inst.d:
            raise UsageError(f"--x0 needs {inst.d} values")
        return x0
    if truth is None:
        return np.zeros(inst.d)
    rho = args.rho * (1.0 + float(np.linalg.norm(truth.x_star)))
    return perturb_start(truth.x_star, rho, args.seed)


def _trap_row(run, cfg):
    # the step that could not be taken: its index, the last scale tried, all halvings used
    k = run.iterations + 1
    scale = cfg.step(k) if isinstance(cfg, GDConfig) else 1.0
    return {"iter": k, "step_size": scale / 2.0**cfg.halving_cap,
            "halvings": cfg.halving_cap, "time_ms": 0.0}


def _or(value, default):
    return default if value is None else value


def cmd_solve(args, summary, outputs):
    inst = _load(args.instance)
    truth = _load_truth(args.truth)
    reg = _reg_for(inst, truth)
    x0 = _start_point(args, inst, truth)
    x_star = None if truth is None else truth.x_star
    obj = Objective(inst, reg, mode=HESSIAN_MODES[args.hessian_mode], threads=args.threads)
    try:
        if args.method == "gd":
            eta, alpha = args.eta, args.alpha
            if eta is None and alpha is None:
                radius = args.rho * (1.0 + float(np.linalg.norm(x0)))
                eta = 1.0 / estimate_smoothness(obj, x0, radius, 20, args.seed)
                summary["eta_estimated"] = eta
            cfg = GDConfig(eta=eta, alpha=alpha, max_iter=_or(args.max_iter, 1000),
                           tol=_or(args.tol, 1e-12), halving_cap=args.halving_cap)
            runner = lambda: gradient_descent(inst, reg, x0, cfg, x_star=x_star, objective=obj)
        else:
            cfg = NewtonConfig(max_iter=_or(args.max_iter, 50), tol=_or(args.tol, 1e-13),
                               halving_cap=args.halving_cap)
            runner = lambda: newton(inst, reg, x0, cfg, x_star=x_star, objective=obj)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    try:
        run = runner()
    except InvalidStart as exc:
        raise UsageError(str(exc)) from exc
    except (StepTrapped, SingularHessian) as exc:
        run = exc.run
        rows = list(run.rows()) + [_trap_row(run, cfg)] if run else []
        write_csv(out, CONVERGENCE_COLUMNS, rows)
        outputs.append(str(out))
        summary.update(status="trapped", message=str(exc))
        _error("solve", exc)
        return EXIT_TRAPPED
    write_csv(out, CONVERGENCE_COLUMNS, run.rows())
    outputs.append(str(out))
    summary.update(status=run.status, message=run.message, iterations=run.iterations,
                   final_loss_total=run.loss_total[-1], final_loss_exp=run.loss_exp[-1],
                   final_grad_norm=run.grad_norm[-1], x_final=run.x.tolist(), shifts=run.shifts)
    if run.r is not None:
        summary["final_r"] = run.r[-1]
    return EXIT_OK if run.converged else EXIT_CAP


# --- verify ------------------------------------------------------------------

def _verify_cases(args):
    if args.random is not None:
        n, d, count, seed = args.random
        if not (n >= d >= 1 and count >= 1):
            raise UsageError("--random needs n >= d >= 1 and count >= 1")
        for k in range(count):
            inst, reg, truth = gen_instance(GenConfig(n, d, seed=seed + k, noise=args.noise))
            rho = args.rho * (1.0 + float(np.linalg.norm(truth.x_star)))
            yield f"random:{seed + k}", inst, reg, probe_point(inst, truth.x_star, rho, seed + k)
        return
    if args.instance is None:
        raise UsageError("give an instance file or --random n d count seed")
    inst = _load(args.instance)
    truth = _load_truth(args.truth)
    reg = _reg_for(inst, truth)
    if truth is None:
        x = np.zeros(inst.d)
    else:
        rho = args.rho * (1.0 + float(np.linalg.norm(truth.x_star)))
        x = probe_point(inst, truth.x_star, rho, args.seed)
    yield str(args.instance), inst, reg, x


def cmd_verify(args, summary, outputs):
    mode = HESSIAN_MODES[args.mode]
    formulas = tuple(args.formulas)
    rows, worst = [], {}
    try:
        for name, inst, reg, x in _verify_cases(args):
            res = check_point(inst, reg, x, mode=mode, formulas=formulas)
            for k, v in res.errors.items():
                worst[k] = max(worst.get(k, 0.0), v)
                rows.append({"case": name, "formula": k, "error": v,
                             "threshold": THRESHOLDS[k], "pass": int(v <= THRESHOLDS[k])})
    except LevinvError as exc:
        raise UsageError(f"cannot evaluate the formulas: {exc}") from exc
    if args.out:
        write_csv(args.out, ("case", "formula", "error", "threshold", "pass"), rows)
        outputs.append(str(args.out))
    failing = sorted(k for k, v in worst.items() if not v <= THRESHOLDS[k])
    summary.update(cases=len({r["case"] for r in rows}), max_error=worst, failing=failing,
                   hessian_mode=args.mode)
    for k in sorted(worst):
        print(f"{k:9s} max error {worst[k]:.3e}  threshold {THRESHOLDS[k]:.0e}  "
              f"{'ok' if k not in failing else 'FAIL'}", file=sys.stderr)
    if failing:
        _error("verify", "threshold exceeded for: " + ", ".join(failing))
        return EXIT_CHECK
    return EXIT_OK


# --- diag --------------------------------------------------------------------

DIAG_COLUMNS = ("report", "quantity", "value", "bound", "gap", "holds")


def _gap(value, bound):
    return bound / value if value > 0 else float("inf")


def cmd_diag(args, summary, outputs):
    inst = _load(args.instance)
    truth = _load_truth(args.truth)
    reg = _reg_for(inst, truth)
    center = truth.x_star if truth is not None else np.zeros(inst.d)
    rows = []
    try:
        if "lipschitz" in args.reports:
            rep = empirical_hessian_lipschitz(inst, reg, center, args.radius, args.samples,
                                              args.seed, threads=args.threads)
            rows.append({"report": "lipschitz", "quantity": "hessian", "value": rep.max_ratio,
                         "bound": rep.bound, "gap": rep.gap, "holds": int(rep.holds)})
            for q in range(6):
                rows.append({"report": "lipschitz", "quantity": f"D{q + 1}",
                             "value": rep.term_ratios[q], "bound": rep.term_bounds[q],
                             "gap": rep.term_gaps[q], "holds": int(rep.term_holds[q])})
            summary.update(beta=rep.beta, R=rep.R, pairs=rep.pairs)
        if "basic" in args.reports:
            rep = basic_lipschitz_suite(inst, center, args.radius, args.samples, args.seed)
            for k in rep.ratios:
                rows.append({"report": "basic", "quantity": k, "value": rep.ratios[k],
                             "bound": rep.bounds[k], "gap": _gap(rep.ratios[k], rep.bounds[k]),
                             "holds": int(rep.holds[k])})
        if "norms" in args.reports:
            snap = snapshot(inst, center, want_full=True)
            beta = args.beta if args.beta is not None else min(snap.sigma_min_Ax, snap.min_abs_s)
            rep = norm_bound_suite(snap, beta)
            values = {"sigma_norm<=1": (rep.sigma_norm, 1.0),
                      "abs_sigma_ii<=1": (rep.max_abs_sigma_ii, 1.0),
                      "column_norm<=1": (rep.max_column_norm, 1.0),
                      "pinv<=1/beta": (rep.pinv_norm, 1.0 / beta),
                      "gram_inv<=1/beta^2": (rep.gram_inv_norm, beta**-2)}
            for k, held in rep.checks.items():
                v, b = values[k]
                rows.append({"report": "norms", "quantity": k, "value": v, "bound": b,
                             "gap": _gap(v, b), "holds": "" if held is None else int(held)})
            worst = np.zeros(6)
            for i in range(snap.n):
                for q, D in enumerate(stripped_d_terms(snap, i)):
                    worst[q] = max(worst[q], np.linalg.norm(D, 2))
            for q in range(6):
                b = D_TERM_BOUNDS[q]
                rows.append({"report": "norms", "quantity": f"stripped_D{q + 1}",
                             "value": float(worst[q]), "bound": b, "gap": _gap(worst[q], b),
                             "holds": int(worst[q] <= b + 1e-9)})
    except LevinvError as exc:
        raise UsageError(f"diagnostics failed: {exc}") from exc
    write_csv(args.out, DIAG_COLUMNS, rows)
    outputs.append(str(args.out))
    failed = [f"{r['report']}:{r['quantity']}" for r in rows if r["holds"] == 0]
    summary.update(failed=failed, checked=sum(r["holds"] != "" for r in rows))
    if failed:
        _error("diag", "inequality failed: " + ", ".join(failed))
        return EXIT_CHECK
    return EXIT_OK


# --- bench -------------------------------------------------------------------

def cmd_bench(args, summary, outputs):
    grid = [(n, d) for n in args.n for d in args.d if n >= d]
    if not grid:
        raise UsageError("empty grid: no (n, d) pair with n >= d")
    rep = timing_bench(grid, reps=args.reps, seed=args.seed, hessian_max_n=args.hessian_max_n)
    rows = [{"n": r.n, "d": r.d, "reps": r.reps, "grad_ms": r.grad_ms,
             "hess_ms": "" if r.hess_ms is None else r.hess_ms} for r in rep.rows]
    write_csv(args.out, ("n", "d", "reps", "grad_ms", "hess_ms"), rows)
    slopes = [{"timing": "gradient", "varied": "n", "fixed": d, "slope": s}
              for d, s in rep.slope_n.items()]
    slopes += [{"timing": "hessian", "varied": "d", "fixed": n, "slope": s}
               for n, s in rep.slope_d.items()]
    write_csv(args.slopes_out, ("timing", "varied", "fixed", "slope"), slopes)
    outputs += [str(args.out), str(args.slopes_out)]
    summary.update(slope_n={str(k): v for k, v in rep.slope_n.items()},
                   slope_d={str(k): v for k, v in rep.slope_d.items()})
    return EXIT_OK


# --- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_pos_int, default=None,
                        help=f"worker threads (default: ${ENV_VAR} or the CPU count; "
                             "1 is fully deterministic)")
    common.add_argument("--manifest", help="also write the JSON manifest to this path")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="levinv", description="Recover x from target leverage scores.",
                formatter_class=argparse.RawDescriptionHelpFormatter, epilog=EXIT_HELP)
    p.add_argument("--version", action="version", version=f"levinv {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate an instance with a planted x*")
    g.add_argument("--n", type=_pos_int, required=True)
    g.add_argument("--d", type=_pos_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--margin", type=float, default=0.5, help="minimum |s_i(x*)|")
    g.add_argument("--mode", choices=("pure", "regularized"), default="pure")
    g.add_argument("--l", type=float, default=1e-3, help="strong-convexity level (regularized)")
    g.add_argument("--beta", type=float, default=0.05, help="margin used in the weight bound")
    g.add_argument("--noise", type=float, default=0.0, help="std of Gaussian noise added to c")
    g.add_argument("--out", help="instance path (default levinv_n{n}_d{d}_seed{seed}.txt)")
    g.add_argument("--truth-out", help="ground-truth path (default <out stem>.truth.txt)")

    s = sub.add_parser("solve", parents=[common], help="run gradient descent or Newton",
                       description="Convergence CSV columns: " + ", ".join(CONVERGENCE_COLUMNS)
                       + ". r_t is empty without --truth.")
    s.add_argument("instance")
    s.add_argument("--method", choices=("gd", "newton"), required=True)
    s.add_argument("--truth", help="ground-truth file: supplies x*, r_t and the weights w")
    s.add_argument("--x0", type=float, nargs="+", help="start point (default near x* or 0)")
    s.add_argument("--rho", type=float, default=1e-2,
                   help="start radius relative to 1 + ||x*||")
    s.add_argument("--seed", type=int, default=0, help="seed for the start perturbation")
    step = s.add_mutually_exclusive_group()
    step.add_argument("--eta", type=float, help="fixed gd step (default 1 / estimated smoothness)")
    step.add_argument("--alpha", type=float, help="gd schedule 2 / (alpha (k + 1))")
    s.add_argument("--max-iter", type=_pos_int, help="default 1000 (gd) or 50 (newton)")
    s.add_argument("--tol", type=float, help="gd gradient / newton step tolerance")
    s.add_argument("--halving-cap", type=int, default=30)
    s.add_argument("--hessian-mode", choices=tuple(HESSIAN_MODES), default="residual")
    s.add_argument("--out", default="convergence.csv")

    v = sub.add_parser("verify", parents=[common], help="compare formulas with the oracles",
                       description="CSV columns: case, formula, error, threshold, pass.")
    v.add_argument("instance", nargs="?")
    v.add_argument("--random", type=int, nargs=4, metavar=("N", "D", "COUNT", "SEED"))
    v.add_argument("--truth", help="evaluate near this x* instead of at 0")
    v.add_argument("--rho", type=float, default=0.1, help="probe radius relative to 1 + ||x*||")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--noise", type=float, default=0.05, help="target noise for --random")
    v.add_argument("--mode", choices=tuple(HESSIAN_MODES), default="residual")
    v.add_argument("--against", choices=("fd",), default="fd")
    v.add_argument("--formulas", nargs="+", choices=tuple(THRESHOLDS),
                   default=list(THRESHOLDS))
    v.add_argument("--out", help="per-case CSV")

    d = sub.add_parser("diag", parents=[common], help="bound and Lipschitz diagnostics",
                       description="CSV columns: " + ", ".join(DIAG_COLUMNS)
                       + ". holds is empty when a bound's hypothesis is unmet.")
    d.add_argument("instance")
    d.add_argument("--truth", help="center the ball at x* (default 0)")
    d.add_argument("--reports", nargs="+", choices=("lipschitz", "basic", "norms"),
                   default=["lipschitz", "basic", "norms"])
    d.add_argument("--radius", type=float, default=0.1)
    d.add_argument("--samples", type=_pos_int, default=200)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--beta", type=float, help="margin for the norm report (default measured)")
    d.add_argument("--out", default="diagnostics.csv")

    b = sub.add_parser("bench", parents=[common], help="time gradient and Hessian evaluation",
                       description="Timings CSV: n, d, reps, grad_ms, hess_ms. "
                                   "Slopes CSV: timing, varied, fixed, slope.")
    b.add_argument("--n", type=_pos_int, nargs="+", required=True)
    b.add_argument("--d", type=_pos_int, nargs="+", required=True)
    b.add_argument("--reps", type=_pos_int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--hessian-max-n", type=int, default=512)
    b.add_argument("--out", default="timings.csv")
    b.add_argument("--slopes-out", default="slopes.csv")
    return p


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "verify": cmd_verify, "diag": cmd_diag,
            "bench": cmd_bench}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="levinv: %(levelname)s: %(message)s", stream=sys.stderr)
    args.threads = resolve_threads(args.threads)
    config = {k: v for k, v in vars(args).items() if k not in ("manifest", "verbose")}
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    summary, outputs = {}, []
    try:
        code = COMMANDS[args.command](args, summary, outputs)
    except UsageError as exc:
        _error(args.command, exc)
        code = EXIT_USAGE
    if args.manifest:
        outputs.append(str(args.manifest))
    manifest = {
        "command": args.command,
        "argv": argv,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started.isoformat(),
        "wall_clock_s": time.perf_counter() - t0,
        "outputs": outputs,
        "exit_code": code,
        "summary": summary,
    }
    text = json.dumps(manifest, indent=2, default=_json_default)
    print(text)
    if args.manifest:
        Path(args.manifest).write_text(text + "\n", encoding="utf-8")
    return code


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


if __name__ == "__main__":
    sys.exit(main())
