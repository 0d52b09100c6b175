"""
Command-line entry point for the chain-ring universality toolkit

    python src/main.py dist --ring Z/2 --u 0 --top 5
    python src/main.py coker --ring Z/8 --matrix "2,3;0,2"
    python src/main.py verify measures --ring Z/4 --max-module 16 --trials 1000
    python src/main.py simulate --ring Z/4 --entry "0:1/2,1:1/2" --n 2..8 --samples 100000 --out report.json

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from typing import List, Optional

# Import from current directory first
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)

import numpy as np
import pandas as pd

import config
from equidist import (EntryDistribution, hypothesis_check, moment_decay_series, norms_and_theta,
                      random_pattern, uniform_replacement_check)
from errors import ChainRingError, InsufficientSignalError, UsageError
from matrix import HowellForm, cokernel, determinant, parse_matrix, smith_normal_form
from measures import MeasureSpace, SignedMeasure, random_signed_measure, measure_sweep
from modules import enumerate_module_types, parse_module_type
from montecarlo import (HAAR, IID, ExperimentPlan, build_report, column_swap_exact, fit_rate,
                        noise_floor, run_experiment)
from ring import format_ring, parse_ring
from theory_dist import limit_table

logger = logging.getLogger("main")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class VerificationFailed(Exception):
    pass


def parse_range(text: str) -> List[int]:
    """"2..8" (inclusive) or "2,3,5" """
    s = text.replace(" ", "")
    try:
        if ".." in s:
            lo, hi = s.split("..")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(x) for x in s.split(",") if x]
    except ValueError as e:
        raise UsageError(f"Cannot parse range {text!r}; expected e.g. '2..8' or '2,4,6'") from e
    if not values:
        raise UsageError(f"Empty range {text!r}")
    return values


def _fraction(text: Optional[str], default: Fraction) -> Fraction:
    if text is None:
        return default
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"Cannot parse fraction {text!r}") from e


# -- config merging ----------------------------------------------------------------

def apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill flags left unset on the command line from --config"""
    if not getattr(args, "config", None):
        return args
    cfg = config.Config.from_json(args.config)
    for key, value in cfg.to_dict().items():
        if key == "n_values":
            if getattr(args, "n", None) is None:
                args.n = ",".join(str(n) for n in value)
            continue
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if cfg.module_cap is not None:
        config.MODULE_CAP = cfg.module_cap
    logger.info("Loaded config %s", args.config)
    return args


def _seed(args) -> int:
    if getattr(args, "seed", None) is None:
        args.seed = config.DEFAULT_SEED
        logger.info("No --seed given; using %d", args.seed)
    return args.seed


def _ring(args):
    if not getattr(args, "ring", None):
        raise UsageError("--ring is required")
    return parse_ring(args.ring)


def _entry(args, ring) -> EntryDistribution:
    return EntryDistribution.parse(args.entry or "haar", ring)


# -- output ------------------------------------------------------------------------

def _write(text: str, out: Optional[str] = None):
    if out:
        with open(out, "w") as f:
            f.write(text if text.endswith("\n") else text + "\n")
        logger.info("Wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def emit_json(payload: dict, out: Optional[str] = None):
    _write(json.dumps(payload, indent=2, default=str), out)


def emit_table(df: pd.DataFrame, args):
    if args.json:
        emit_json({"schema": config.REPORT_SCHEMA, "seed": getattr(args, "seed", None),
                   "rows": json.loads(df.to_json(orient="records"))}, args.out)
    elif args.csv:
        _write(df.to_csv(index=False), args.out)
    else:
        _write(df.to_string(index=False), args.out)


def emit_plot(path: str, points: List[dict]):
    """gnuplot data: n, log TV and the CI bounds when present"""
    lines = ["# n log_tv ci_low ci_high"]
    for p in points:
        if p["tv"] <= 0:
            continue
        ci = p.get("ci") or [p["tv"], p["tv"]]
        low = np.log(ci[0]) if ci[0] > 0 else float("nan")
        high = np.log(ci[1]) if ci[1] > 0 else float("nan")
        lines.append(f"{p['n']} {np.log(p['tv']):.12g} {low:.12g} {high:.12g}")
    _write("\n".join(lines), path)


# -- theory and normal forms ---------------------------------------------------------------

def cmd_dist(args) -> int:
    ring = _ring(args)
    u = args.u if args.u is not None else 0
    df = limit_table(ring, u, args.max_size, args.terms)
    if args.top:
        df = df.head(args.top)
    emit_table(df[["module_type", "probability", "tail_bound"]], args)
    return EXIT_OK


def cmd_snf(args) -> int:
    ring = _ring(args)
    M = parse_matrix(args.matrix, ring)
    snf = smith_normal_form(M, transforms=args.transforms)
    if args.json:
        payload = {"ring": format_ring(ring), "exponents": list(snf.exponents), "diagonal": snf.diagonal.to_text()}
        if args.transforms:
            payload.update(U=snf.U.to_text(), V=snf.V.to_text())
        emit_json(payload, args.out)
        return EXIT_OK
    lines = [f"exponents: {list(snf.exponents)}", f"diagonal: {snf.diagonal.to_text()}"]
    if args.transforms:
        lines += [f"U: {snf.U.to_text()}", f"V: {snf.V.to_text()}"]
    _write("\n".join(lines), args.out)
    return EXIT_OK


def cmd_coker(args) -> int:
    ring = _ring(args)
    A = cokernel(parse_matrix(args.matrix, ring))
    if args.json:
        emit_json({"ring": format_ring(ring), "lambda": list(A.lam), "module_type": str(A), "size": A.size}, args.out)
    else:
        _write(A.short, args.out)
    return EXIT_OK


def cmd_det(args) -> int:
    ring = _ring(args)
    d = determinant(parse_matrix(args.matrix, ring))
    if args.json:
        emit_json({"ring": format_ring(ring), "det": d, "valuation": ring.valuation(d)}, args.out)
    else:
        _write(str(d), args.out)
    return EXIT_OK


def cmd_span(args) -> int:
    ring = _ring(args)
    form = HowellForm.of(parse_matrix(args.matrix, ring))
    if args.json:
        emit_json({"ring": format_ring(ring), "howell": form.key, "size": form.size,
                   "quotient_size": form.quotient_size}, args.out)
    else:
        _write(f"{form.key}\nsize: {form.size}", args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    ring = _ring(args)
    M = parse_module_type(args.module, ring)
    space = MeasureSpace.of(M)
    if args.measure:
        weights = [_fraction(w, Fraction(0)) for w in args.measure.split(",")]
        if len(weights) != space.module.size:
            raise UsageError(f"Measure needs {space.module.size} weights, got {len(weights)}")
        nu = SignedMeasure.from_weights(space.module, weights)
    else:
        nu = random_signed_measure(space.module, np.random.default_rng(_seed(args)))
    rows = []
    for comp in space.decompose(nu):
        l1, l2_sq = comp.component.l1_norm(), comp.component.l2_squared()
        rows.append({
            "kernel": " ".join("(" + ",".join(str(c) for c in g) + ")" for g in space.lattice.describe(comp.kernel_index)) or "0",
            "quotient": comp.quotient.short,
            "dim": space.space_dimension(comp.kernel_index, args.method),
            "l1": str(l1),
            "l1_decimal": float(l1),
            "l2_sq": str(l2_sq),
            "l2_decimal": float(l2_sq) ** 0.5,
        })
    emit_table(pd.DataFrame(rows), args)
    return EXIT_OK


# -- verification ------------------------------------------------------------------

def cmd_verify_measures(args) -> int:
    ring = _ring(args)
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    trials = args.trials or 100
    max_module = args.max_module or 16
    results, audits = [], []
    for A in enumerate_module_types(ring, max_module):
        if not A.lam:
            continue
        space = MeasureSpace.of(A)
        reports = measure_sweep(space, trials, rng)
        results.extend(vars(r) | {"passed": r.passed} for r in reports)
        fourier_ok = all((space.space_dimension(i, args.method) != 0) == space.lattice.quotient_type(i).is_cyclic()
                         for i in range(len(space.lattice)))
        audits.append({"module": A.short, "dimension_sum": space.dimension_audit(args.method), "fourier": fourier_ok})
    passed = all(r["passed"] for r in results) and all(a["dimension_sum"] and a["fourier"] for a in audits)
    emit_json({"schema": config.REPORT_SCHEMA, "seed": seed, "command": "verify measures",
               "ring": format_ring(ring), "trials": trials, "sweeps": results, "audits": audits,
               "passed": passed}, args.out)
    if not passed:
        raise VerificationFailed("measure sweep found violations")
    return EXIT_OK


def cmd_verify_moment(args) -> int:
    ring = _ring(args)
    xi = _entry(args, ring)
    M = parse_module_type(args.module, ring)
    ls = parse_range(args.l)
    eps0 = _fraction(args.eps0, config.EPS0)
    check = hypothesis_check(xi)
    if not check.ok:
        logger.warning("Entry law fails the hypothesis: %s", check)
    df = moment_decay_series(M, xi, ls, args.k_offset, eps0, args.statistic)
    failures = []
    if args.ratio_bound is not None:
        bound = float(_fraction(args.ratio_bound, Fraction(1)))
        late = df[(df["l"] >= args.ratio_from) & df["ratio"].notna()]
        failures += [f"ratio {r:.6f} > {bound} at l={l}" for l, r in zip(late["l"], late["ratio"]) if r > bound]
    if args.patterns:
        rng = np.random.default_rng(_seed(args))
        l = ls[0]
        k = l + args.k_offset
        for _ in config.progress(range(args.patterns), desc="patterns"):
            pattern = random_pattern(l, k, rng)
            result = uniform_replacement_check(M, xi, pattern, l, k, eps0)
            if not result.holds:
                failures.append(f"replacement increased the sum for pattern {sorted(pattern)}")
    emit_table(df, args)
    if failures:
        for f in failures:
            logger.error(f)
        raise VerificationFailed(f"{len(failures)} moment check(s) failed")
    return EXIT_OK


def cmd_verify_swap(args) -> int:
    ring = _ring(args)
    xi = _entry(args, ring)
    seed = _seed(args)
    u = args.u if args.u is not None else 0
    ns = parse_range(args.n or "2..6")
    swaps = [column_swap_exact(ring, n, u, xi, args.matrices, seed) for n in ns]
    bound = None if xi.is_haar else norms_and_theta(xi).theta_bound
    payload = {"schema": config.REPORT_SCHEMA, "seed": seed, "command": "verify swap",
               "ring": format_ring(ring), "entry": xi.to_text(), "u": u, "matrices": args.matrices,
               "per_n": [{"n": s.n, "mean_tv": s.mean_tv, "stderr": s.stderr} for s in swaps]}
    try:
        rate = fit_rate(ns, [s.mean_tv for s in swaps], bound, slack=args.slack)
    except InsufficientSignalError as e:
        payload.update(rate_fit=None, passed=False, reason=str(e))
        emit_json(payload, args.out)
        raise VerificationFailed(str(e)) from e
    payload.update(rate_fit=rate.to_dict(), theta_limit=args.theta_limit, passed=rate.within(args.theta_limit))
    emit_json(payload, args.out)
    if args.emit_plot:
        emit_plot(args.emit_plot, rate.points)
    if not payload["passed"]:
        raise VerificationFailed(f"fitted rate {rate.theta_hat:.4f} exceeds {args.theta_limit}")
    return EXIT_OK


# -- simulation --------------------------------------------------------------------

def _rate_from_report(report: dict, theta_bound: Optional[float], slack: Optional[float] = None):
    iid = [p for p in report["per_n"] if p["model"] == IID and p["tv_vs_haar"] is not None]
    floors = {p["n"]: p["noise_floor"] for p in report["per_n"] if p["model"] == HAAR}
    if not iid:
        raise InsufficientSignalError("Report has no i.i.d. vs Haar comparisons")
    return fit_rate([p["n"] for p in iid], [p["tv_vs_haar"] for p in iid], theta_bound,
                    [floors.get(p["n"], 0.0) for p in iid], [p["ci"] for p in iid], slack)


def cmd_simulate(args) -> int:
    ring = _ring(args)
    xi = _entry(args, ring)
    plan = ExperimentPlan(
        ring=ring,
        xi=xi,
        u=args.u if args.u is not None else 0,
        n_values=tuple(parse_range(args.n or "2..8")),
        samples=args.samples or 10000,
        invariant=args.invariant or "coker",
        seed=_seed(args),
        workers=args.workers or config.DEFAULT_WORKERS,
    )
    results = run_experiment(plan)
    report = build_report(plan, results, resamples=args.resamples)
    bound = None if xi.is_haar else norms_and_theta(xi).theta_bound
    try:
        rate = _rate_from_report(report, bound, args.slack)
        report["rate_fit"] = rate.to_dict()
        if args.emit_plot:
            emit_plot(args.emit_plot, rate.points)
    except InsufficientSignalError as e:
        logger.warning("No rate fit: %s", e)

    if args.csv:
        rows = [{"n": p["n"], "model": p["model"], "class": h["class"], "count": h["count"]}
                for p in report["per_n"] for h in p["histogram"]]
        _write(pd.DataFrame(rows, columns=["n", "model", "class", "count"]).to_csv(index=False), args.out)
    elif args.json or args.out:
        emit_json(report, args.out)
    else:
        rows = [{"n": p["n"], "tv_vs_haar": p["tv_vs_haar"], "ci": p["ci"], "noise_floor": p["noise_floor"]}
                for p in report["per_n"] if p["model"] == IID]
        _write(pd.DataFrame(rows).to_string(index=False))
        if report["rate_fit"]:
            _write(f"theta_hat: {report['rate_fit']['theta_hat']:.6f}")
    return EXIT_OK


def cmd_rate(args) -> int:
    if args.input:
        try:
            with open(args.input, "r") as f:
                report = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Cannot read report {args.input}: {e}") from e
        bound = args.theta_bound
        if bound is None and report.get("plan", {}).get("entry") not in (None, "haar"):
            ring = parse_ring(report["plan"]["ring"])
            bound = norms_and_theta(EntryDistribution.parse(report["plan"]["entry"], ring)).theta_bound
        rate = _rate_from_report(report, bound, args.slack)
    elif args.tv:
        pairs = [part.split(":") for part in args.tv.split(",")]
        try:
            ns, tvs = [int(n) for n, _ in pairs], [float(t) for _, t in pairs]
        except ValueError as e:
            raise UsageError(f"Cannot parse --tv {args.tv!r}; expected 'n:tv,...'") from e
        rate = fit_rate(ns, tvs, args.theta_bound, slack=args.slack)
    else:
        raise UsageError("rate needs --input report.json or --tv 'n:tv,...'")
    emit_json({"schema": config.REPORT_SCHEMA, "rate_fit": rate.to_dict()}, args.out)
    if args.emit_plot:
        emit_plot(args.emit_plot, rate.points)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON plan; command-line flags take precedence")
    common.add_argument("--ring", help="'Z/4', 'Z/2^3', 'F2[t]/t^2', ...")
    common.add_argument("--seed", type=int, help=f"Master seed (default {config.DEFAULT_SEED})")
    common.add_argument("--json", action="store_true", help="Emit JSON")
    common.add_argument("--csv", action="store_true", help="Emit CSV")
    common.add_argument("--out", help="Write output to this file instead of stdout")
    common.add_argument("--log-level", default=config.LOG_LEVEL)
    common.add_argument("--quiet", action="store_true", help="No progress bars")
    common.add_argument("--workers", type=int)

    p = argparse.ArgumentParser(description="Random matrices over finite chain rings")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("dist", parents=[common], help="Limit law of Haar cokernels")
    s.add_argument("--u", type=int)
    s.add_argument("--max-size", type=int, default=64, dest="max_size")
    s.add_argument("--top", type=int)
    s.add_argument("--terms", type=int, default=config.TRUNCATION_TERMS)
    s.set_defaults(func=cmd_dist)

    for name, func in (("snf", cmd_snf), ("coker", cmd_coker), ("det", cmd_det), ("span", cmd_span)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--matrix", required=True, help="Rows separated by ';', entries by ','")
        if name == "snf":
            s.add_argument("--transforms", action="store_true", help="Also print U and V")
        s.set_defaults(func=func)

    s = sub.add_parser("decompose", parents=[common], help="Orthogonal decomposition of a measure")
    s.add_argument("--module", required=True, help="'[2,1]' or 'R/pi^2 + R/pi'")
    s.add_argument("--measure", help="Comma-separated weights in element order; random when omitted")
    s.add_argument("--method", choices=("formula", "trace", "construct"), default="construct")
    s.set_defaults(func=cmd_decompose)

    verify = sub.add_parser("verify", help="Verification sweeps")
    vsub = verify.add_subparsers(dest="suite", required=True)

    s = vsub.add_parser("measures", parents=[common])
    s.add_argument("--max-module", type=int, dest="max_module")
    s.add_argument("--trials", type=int)
    s.add_argument("--method", choices=("formula", "trace", "construct"), default="construct")
    s.set_defaults(func=cmd_verify_measures)

    s = vsub.add_parser("moment", parents=[common])
    s.add_argument("--entry")
    s.add_argument("--module", required=True)
    s.add_argument("--l", default="2..8")
    s.add_argument("--k-offset", type=int, default=0, dest="k_offset")
    s.add_argument("--eps0")
    s.add_argument("--statistic", choices=("zero", "linf"), default="zero")
    s.add_argument("--ratio-bound", dest="ratio_bound", help="Fail if a ratio exceeds this from --ratio-from on")
    s.add_argument("--ratio-from", type=int, default=3, dest="ratio_from")
    s.add_argument("--patterns", type=int, default=0, help="Random uniform-replacement patterns to check")
    s.set_defaults(func=cmd_verify_moment)

    s = vsub.add_parser("swap", parents=[common])
    s.add_argument("--entry")
    s.add_argument("--u", type=int)
    s.add_argument("--n")
    s.add_argument("--matrices", type=int, default=200)
    s.add_argument("--theta-limit", type=float, default=0.85, dest="theta_limit")
    s.add_argument("--slack", type=float, help="Factor on the theoretical theta bound (default CHAIN_RATE_SLACK)")
    s.add_argument("--emit-plot", dest="emit_plot")
    s.set_defaults(func=cmd_verify_swap)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo: i.i.d. vs Haar")
    s.add_argument("--entry")
    s.add_argument("--u", type=int)
    s.add_argument("--n")
    s.add_argument("--samples", type=int)
    s.add_argument("--invariant", choices=config.INVARIANTS)
    s.add_argument("--resamples", type=int)
    s.add_argument("--slack", type=float, help="Factor on the theoretical theta bound (default CHAIN_RATE_SLACK)")
    s.add_argument("--emit-plot", dest="emit_plot")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("rate", parents=[common], help="Fit a decay rate")
    s.add_argument("--input", help="Report written by simulate")
    s.add_argument("--tv", help="'n:tv,...' series")
    s.add_argument("--theta-bound", type=float, dest="theta_bound")
    s.add_argument("--slack", type=float, help="Factor on the theoretical theta bound (default CHAIN_RATE_SLACK)")
    s.add_argument("--emit-plot", dest="emit_plot")
    s.set_defaults(func=cmd_rate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.quiet:
        config.QUIET = True
    try:
        apply_config(args)
        return args.func(args)
    except VerificationFailed as e:
        logger.error("Verification failed: %s", e)
        return EXIT_FAILED
    except ChainRingError as e:
        logger.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
