#!/usr/bin/env python3
"""
src/main.py - superres command line
Run:
  python -m src.main fisher --psf gaussian --measurement rotade,bspade --theta 0:0.5:6 --eps 0.001:0.5:200
  python -m src.main chernoff --eps 0.25 --theta 0:0.5:51
  python -m src.main intrinsic-error --theta -1:1:81 --eps 0.1,0.25,0.5
  python -m src.main selftest

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""
import argparse
import itertools
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from src.analysis.discrimination import (
    chernoff_point,
    exact_error_probability,
    intrinsic_error_breakdown,
    intrinsic_error_vs_reference,
    max_relative_improvement,
    single_shot_table,
)
from src.analysis.estimation import (
    asymptotic_min_separation,
    fisher_summary,
    min_resolvable_separation,
    published_sinc_rotade_min_separation,
)
from src.analytics.metrics_builder import append_run_summary, build_metrics
from src.analytics.tables import FORMATS, table_metadata, write_table
from src.config import output, simulation
from src.errors import USAGE_ERRORS, NumericalError
from src.logger import get_logger, phase, timing
from src.measurements.povm import Measurement, Representation, build_povm, distribution_pair
from src.optics.psf import PsfKind, Scenario
from src.optics.qubit_model import StateConvention
from src.selftest import run_selftest
from src.simulate.montecarlo import RunConfig, empirical_error_rate, empirical_estimator_variance

logger = get_logger(__name__)

DEFAULT_MAX_PROCS = int(os.getenv("MAX_PROCS", "4"))
SHOW_PROGRESS = os.getenv("CI", "false").lower() != "true" and sys.stderr.isatty()
RANGE_FLAGS = ("--theta", "--eps", "--n", "--x-ref")
NEGATIVE_VALUE = re.compile(r"^-[\d.]")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


# -------------------------------------------------------------------
# Argument parsing
# -------------------------------------------------------------------

class UsageArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; here 2 means a numerical failure, so usage errors exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> List[float]:
    """'start:stop:count' (both ends included) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            count = int(count)
            if count < 1:
                raise ValueError
            if count == 1:
                return [float(start)]
            step = (float(stop) - float(start)) / (count - 1)
            values = [float(start) + i * step for i in range(count - 1)] + [float(stop)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range '{text}': use start:stop:count or a comma list")
    if not values:
        raise argparse.ArgumentTypeError(f"empty range '{text}'")
    return values


def parse_counts(text: str) -> List[int]:
    values = parse_range(text)
    if any(v < 1 or v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"photon numbers must be positive integers, got '{text}'")
    return [int(v) for v in values]


def parse_measurements(text: str) -> List[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    valid = {m.value for m in Measurement}
    bad = [n for n in names if n not in valid]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown measurement(s) {bad}; choose from {sorted(valid)}")
    return names


def glue_negative_values(argv: Sequence[str]) -> List[str]:
    """'--theta -1:1:81' -> '--theta=-1:1:81' so argparse does not read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in RANGE_FLAGS and i + 1 < len(argv) and NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def build_parser() -> UsageArgumentParser:
    common = UsageArgumentParser(add_help=False)
    common.add_argument("--psf", choices=[k.value for k in PsfKind], default=PsfKind.GAUSSIAN.value)
    common.add_argument("--sinc-convention", choices=["paper", "derived"], default="paper",
                        help="Sinc width factor (1/sqrt3 or pi/sqrt3); also sets the ROTADE rotation angle")
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("--output", default=None, help="output directory")
    common.add_argument("--max-procs", type=int, default=DEFAULT_MAX_PROCS)

    def representation(p, default=Representation.FULL_MODEL.value):
        p.add_argument("--representation", choices=[r.value for r in Representation], default=default)
        p.add_argument("--convention", choices=[c.value for c in StateConvention], default=None,
                       help="qubit state convention (qubit representation only)")

    p = UsageArgumentParser(prog="superres", description="Two-source superresolution under demultiplexer misalignment")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fisher", parents=[common], help="classical and quantum Fisher information sweeps")
    f.add_argument("--measurement", type=parse_measurements, default="rotade,bspade,spade01")
    f.add_argument("--theta", type=parse_range, default="0:0.5:6")
    f.add_argument("--eps", type=parse_range, default="0.001:0.5:200")
    f.add_argument("--detected-only", action="store_true", help="drop the bucket (no-click) outcome")
    representation(f)

    e = sub.add_parser("epsmin", parents=[common], help="minimal resolvable separation")
    e.add_argument("--measurement", type=parse_measurements, default="rotade,bspade,spade01")
    e.add_argument("--theta", type=parse_range, default="0.02:0.1:5")
    e.add_argument("--n", type=parse_counts, default="1000,10000")
    e.add_argument("--method", choices=["series", "exact", "both"], default="series")
    representation(e)

    d = sub.add_parser("discriminate", parents=[common], help="single-shot type-1/type-2 errors")
    d.add_argument("--measurement", type=parse_measurements, default="rotade,spade01,bspade")
    d.add_argument("--theta", type=parse_range, default="0.01:0.05:5")
    d.add_argument("--eps", type=parse_range, default="0.25")
    representation(d)

    c = sub.add_parser("chernoff", parents=[common], help="Chernoff exponents against the quantum bound")
    c.add_argument("--vs", choices=["theta", "eps"], default="theta")
    c.add_argument("--measurement", type=parse_measurements, default="rotade,spade01,bspade")
    c.add_argument("--theta", type=parse_range, default=None)
    c.add_argument("--eps", type=parse_range, default=None)
    representation(c)

    m = sub.add_parser("montecarlo", parents=[common], help="simulated photon records")
    m.add_argument("--mode", choices=["error", "variance"], default="error")
    m.add_argument("--measurement", choices=[x.value for x in Measurement if x is not Measurement.HELSTROM],
                   default=Measurement.ROTADE.value)
    m.add_argument("--theta", type=float, default=0.0)
    m.add_argument("--eps", type=float, default=0.25)
    m.add_argument("--photons", type=int, default=None)
    m.add_argument("--trials", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    representation(m)

    i = sub.add_parser("intrinsic-error", parents=[common], help="probability mass outside the two monitored modes")
    i.add_argument("--theta", type=parse_range, default="-1:1:81")
    i.add_argument("--eps", type=parse_range, default="0.1,0.25,0.5")
    i.add_argument("--x-ref", type=parse_range, default=None, help="sweep the reference position instead of theta")
    i.add_argument("--x-single", type=float, default=0.3)
    i.add_argument("--x-centroid", type=float, default=0.0)
    i.add_argument("--separation", type=float, default=0.1)

    sub.add_parser("selftest", parents=[common], help="structural invariant suite")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(glue_negative_values(argv))
    args.argv = argv
    args.format = args.format or output("format")
    args.output = args.output or output("dir")
    if getattr(args, "convention", "unset") is None:
        exact = args.command == "epsmin"
        args.convention = (StateConvention.EXACT if exact else StateConvention.SECOND_ORDER).value
    return args


# -------------------------------------------------------------------
# Sweep workers (top-level so they pickle)
# -------------------------------------------------------------------

def fisher_rows(task: Dict[str, Any]) -> List[Dict[str, Any]]:
    row = fisher_summary(task["measurement"], task["theta"], task["eps"], task["psf"], task["representation"],
                         task["convention"], task["sinc_convention"], not task["detected_only"])
    return [{"measurement": task["measurement"], "theta": task["theta"], "eps": task["eps"], **row}]


def epsmin_rows(task: Dict[str, Any]) -> List[Dict[str, Any]]:
    m, theta, n, kind = task["measurement"], task["theta"], task["n"], task["psf"]
    row = {"measurement": m, "theta": theta, "n": n}
    methods = ["series", "exact"] if task["method"] == "both" else [task["method"]]
    for method in methods:
        row[f"eps_min_{method}"] = min_resolvable_separation(m, theta, n, kind, method, task["representation"],
                                                             task["convention"], task["sinc_convention"])
    if m in (Measurement.ROTADE.value, Measurement.SPADE01.value, Measurement.BSPADE.value):
        row["eps_min_closed_form"] = asymptotic_min_separation(m, theta, n, kind, task["sinc_convention"])
    if kind == PsfKind.SINC.value and m == Measurement.ROTADE.value:
        row["eps_min_literature"] = published_sinc_rotade_min_separation(theta, n)
    return [row]


def discriminate_rows(task: Dict[str, Any]) -> List[Dict[str, Any]]:
    df = single_shot_table([task["theta"]], task["eps"], task["psf"], task["measurements"], task["representation"],
                           task["convention"], task["sinc_convention"])
    return df.to_dict(orient="records")


def chernoff_rows(task: Dict[str, Any]) -> List[Dict[str, Any]]:
    return [chernoff_point(task["theta"], task["eps"], task["psf"], task["measurements"], task["representation"],
                           task["sinc_convention"], task["convention"])]


def intrinsic_rows(task: Dict[str, Any]) -> List[Dict[str, Any]]:
    scenario = Scenario.from_dimensionless(task["theta"], task["theta"], task["eps"], task["psf"],
                                           sinc_convention=task["sinc_convention"])
    return [{"theta": task["theta"], "eps": task["eps"], **intrinsic_error_breakdown(scenario)}]


def sweep_worker(fn: Callable[[Dict[str, Any]], List[Dict[str, Any]]], task: Dict[str, Any]) -> Dict[str, Any]:
    """Numerical failures come back as status dicts; usage errors propagate."""
    try:
        return {"status": "ok", "rows": fn(task), "task": task}
    except NumericalError as e:
        get_logger(f"worker.{fn.__name__}").exception("%s failed for %s", fn.__name__, task)
        return {"status": "error", "error": f"{type(e).__name__}: {e}", "task": task}


def run_sweep(fn: Callable, tasks: List[Dict[str, Any]], max_procs: int,
              label: str) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    logger.info("Sweeping %d points of %s with max_procs=%s", len(tasks), label, max_procs)
    results = []
    if max_procs <= 1 or len(tasks) == 1:
        for task in tqdm(tasks, desc=label, disable=not SHOW_PROGRESS):
            results.append(sweep_worker(fn, task))
    else:
        with ProcessPoolExecutor(max_workers=max_procs) as exe:
            futures = {exe.submit(sweep_worker, fn, task): task for task in tasks}
            for fut in tqdm(as_completed(futures), total=len(futures), desc=label, disable=not SHOW_PROGRESS):
                results.append(fut.result())
    rows = [r for res in results if res["status"] == "ok" for r in res["rows"]]
    failures = [res for res in results if res["status"] != "ok"]
    for res in failures:
        logger.error("%s failed at %s: %s", label, res["task"], res["error"])
    return rows, failures


# -------------------------------------------------------------------
# Commands
# -------------------------------------------------------------------

def _base_task(args) -> Dict[str, Any]:
    return {"psf": args.psf, "sinc_convention": args.sinc_convention,
            "representation": getattr(args, "representation", Representation.FULL_MODEL.value),
            "convention": getattr(args, "convention", StateConvention.SECOND_ORDER.value)}


def cmd_fisher(args):
    tasks = [{**_base_task(args), "measurement": m, "theta": t, "eps": e, "detected_only": args.detected_only}
             for m, t, e in itertools.product(args.measurement, args.theta, args.eps)]
    rows, failures = run_sweep(fisher_rows, tasks, args.max_procs, "fisher")
    return "fisher", pd.DataFrame(rows), ["measurement", "theta", "eps"], failures, {
        "detected_only": args.detected_only}


def cmd_epsmin(args):
    tasks = [{**_base_task(args), "measurement": m, "theta": t, "n": n, "method": args.method}
             for m, t, n in itertools.product(args.measurement, args.theta, args.n)]
    rows, failures = run_sweep(epsmin_rows, tasks, args.max_procs, "epsmin")
    return "epsmin", pd.DataFrame(rows), ["measurement", "theta", "n"], failures, {"method": args.method}


def cmd_discriminate(args):
    tasks = [{**_base_task(args), "measurements": args.measurement, "theta": t, "eps": e}
             for t, e in itertools.product(args.theta, args.eps)]
    rows, failures = run_sweep(discriminate_rows, tasks, args.max_procs, "discriminate")
    return "discriminate", pd.DataFrame(rows), ["theta", "eps", "measurement"], failures, {}


def cmd_chernoff(args):
    if args.vs == "theta":
        thetas, epss = args.theta or parse_range("0:0.5:51"), args.eps or parse_range("0.1,0.25,0.5")
    else:
        thetas, epss = args.theta or parse_range("0.4"), args.eps or parse_range("0.01:0.5:50")
    tasks = [{**_base_task(args), "measurements": args.measurement, "theta": t, "eps": e}
             for t, e in itertools.product(thetas, epss)]
    rows, failures = run_sweep(chernoff_rows, tasks, args.max_procs, f"chernoff_vs_{args.vs}")
    df = pd.DataFrame(rows)
    extra = {"vs": args.vs}
    names = set(args.measurement)
    if not df.empty and {"rotade", "bspade"} <= names:
        best = max_relative_improvement(df)
        logger.info("Largest ROTADE improvement over B-SPADE: %.4f at theta=%g eps=%g",
                    best["improvement"], best["theta"], best["eps"])
        extra["max_rotade_improvement"] = best["improvement"]
    sort = ["theta", "eps"] if args.vs == "theta" else ["eps", "theta"]
    return f"chernoff_vs_{args.vs}", df, sort, failures, extra


def cmd_montecarlo(args):
    seed = simulation("seed") if args.seed is None else args.seed
    n = args.photons or simulation("n_photons")
    trials = args.trials or simulation("n_trials")
    povm = build_povm(args.measurement, theta=args.theta, kind=args.psf, sinc_convention=args.sinc_convention)
    scenario = Scenario.from_dimensionless(args.theta, args.theta, args.eps, args.psf,
                                           sinc_convention=args.sinc_convention)
    config = RunConfig(scenario=scenario, povm=povm, n_photons=n, n_trials=trials, seed=seed,
                       representation=Representation(args.representation),
                       convention=StateConvention(args.convention), max_procs=args.max_procs,
                       chunk_size=simulation("chunk_size"))
    if args.mode == "error":
        summary = empirical_error_rate(config)
    else:
        summary = empirical_estimator_variance(config)
    row = {"measurement": args.measurement, "mode": args.mode, "theta": args.theta, "eps": args.eps,
           "n_photons": n, "n_trials": trials, **summary.as_record()}
    if args.mode == "error":
        p1, p2 = distribution_pair(povm, scenario, config.representation, config.convention)
        try:
            row["exact_error"] = exact_error_probability(p1, p2, n)
        except USAGE_ERRORS as e:
            logger.info("Exact reference skipped: %s", e)
    return f"montecarlo_{args.mode}", pd.DataFrame([row]), [], [], {"seed": seed}


def cmd_intrinsic(args):
    if args.x_ref is not None:
        df = intrinsic_error_vs_reference(args.x_single, args.x_centroid, args.separation, args.x_ref, args.psf,
                                          sinc_convention=args.sinc_convention)
        return "intrinsic_error_vs_xref", df, ["x_ref"], [], {
            "x_single": args.x_single, "x_centroid": args.x_centroid, "separation": args.separation}
    tasks = [{**_base_task(args), "theta": t, "eps": e} for t, e in itertools.product(args.theta, args.eps)]
    rows, failures = run_sweep(intrinsic_rows, tasks, args.max_procs, "intrinsic-error")
    return "intrinsic_error", pd.DataFrame(rows), ["eps", "theta"], failures, {}


def cmd_selftest(args):
    df = run_selftest()
    failures = [{"task": {"check": r["check"]}, "error": "check failed"} for r in df.to_dict("records") if not r["passed"]]
    return "selftest", df, ["check"], failures, {}


COMMANDS = {
    "fisher": cmd_fisher,
    "epsmin": cmd_epsmin,
    "discriminate": cmd_discriminate,
    "chernoff": cmd_chernoff,
    "montecarlo": cmd_montecarlo,
    "intrinsic-error": cmd_intrinsic,
    "selftest": cmd_selftest,
}


def run_command(args) -> int:
    t0 = time.time()
    phase(logger, args.command)
    status, rows = "ok", 0
    try:
        stem, df, sort_by, failures, extra = COMMANDS[args.command](args)
        meta = table_metadata(args.command, args.argv, psf=args.psf, sinc_convention=args.sinc_convention,
                              representation=getattr(args, "representation", None),
                              convention=getattr(args, "convention", None), **extra)
        write_table(df, args.output, stem, args.format, meta, sort_by)
        rows = len(df)
        code = EXIT_NUMERICAL if failures else EXIT_OK
        status = "ok" if not failures else f"{len(failures)} failed"
    except USAGE_ERRORS as e:
        logger.error("%s: invalid parameters: %s", args.command, e)
        code, status = EXIT_USAGE, "usage error"
    except NumericalError as e:
        logger.error("%s: numerical failure: %s: %s", args.command, type(e).__name__, e)
        code, status = EXIT_NUMERICAL, "numerical failure"

    duration = timing(logger, args.command, t0)
    append_run_summary(args.output, {"run_time": time.strftime("%Y-%m-%d %H:%M:%S"), "command": args.command,
                                     "status": status, "rows": rows, "duration_sec": duration})
    build_metrics(args.output)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
