"""Command-line front end.

    conorbit run CONFIG [--seed S] [--out-dir DIR] [--threads T] [--no-plots]
    conorbit reproduce [NAME ...] [--out-dir DIR] [--threads T] [--no-plots]
    conorbit list-models
    conorbit list-scenarios
    conorbit schema

Exit status: 0 all checks pass, 1 assertion or solver failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import critical
from .config import RunConfig, build_scenario, load_config, schema_text
from .errors import BracketError, ChainViolation, ConfigError, ConorbitError
from .flow import no_connection_certificate
from .models import list_models
from .pathspace import path_to_csv, path_from_polyline
from .reproduce import reproduce_suite, rows_to_csv
from .scenarios import list_scenarios
from .solvers import (MinimizeConfig, StringConfig, _fmt, _nearest_param, minimize_multistart, mountain_pass,
                      struwe_scan)

log = logging.getLogger("conorbit")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _write_rows(file, header, rows):
    with open(file, "w") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(_fmt(v) for v in r) + "\n")


def _shifts(n):
    out = [0]
    i = 1
    while len(out) < n:
        out.append(i)
        if len(out) < n:
            out.append(-i)
        i += 1
    return out


# ---------------------------------------------------------------------------
# tasks: each returns (passed, verdict dict)
# ---------------------------------------------------------------------------

def task_minimize(cfg: RunConfig, scen, out, plots, threads):
    model, Q0, Q1, k = scen.model, scen.Q0, scen.Q1, scen.k
    mcfg = MinimizeConfig(N=cfg.get("solver.N"), max_iters=cfg.get("solver.max_iters"),
                          grad_tol=cfg.get("solver.grad_tol"), multistart=cfg.get("solver.multistart"),
                          seed=cfg.get("seed"))
    waypoints = cfg.get("init.waypoints") or ()
    s0 = 0.0 if Q0.is_point else _nearest_param(Q0, Q1.at(0.0))
    s1 = _nearest_param(Q1, Q0.at(s0))
    reports = []
    for j, shift in enumerate(_shifts(cfg.get("init.paths"))):
        init = path_from_polyline(Q0, s0, Q1, s1, waypoints, mcfg.N, cfg.get("init.T"), end_shift=(0, shift))
        best, _ = minimize_multistart(model, Q0, Q1, k, [init], mcfg, threads=threads)
        reports.append(best)
        if best.path is not None:
            path_to_csv(best.path, os.path.join(out, f"path_{j}.csv"))
    header = list(reports[0].summary_row())
    _write_rows(os.path.join(out, "summary.csv"), ["path"] + header,
                [[j] + [r.summary_row().get(h, "") for h in header] for j, r in enumerate(reports)])
    if plots:
        from .plotting import plot_paths
        plot_paths(model, [r.path for r in reports], Q0, Q1, os.path.join(out, "paths.png"), f"k = {k:g}")
    components = sorted({r.component for r in reports if r.converged and r.component is not None})
    passed = all(r.converged for r in reports)
    return passed, {"verdict": [r.verdict for r in reports], "components": [list(c) for c in components]}


def _string_cfg(cfg):
    return StringConfig(beads=cfg.get("string.beads"), N=cfg.get("string.N"), max_iters=cfg.get("string.max_iters"),
                        residual_tol=cfg.get("string.residual_tol"))


def task_mountain_pass(cfg, scen, out, plots, threads):
    rep = mountain_pass(scen.model, scen.Q0, scen.Q1, scen.omega, scen.k, _string_cfg(cfg), scen.epsilon)
    keys = ["verdict", "k", "minimax", "alpha", "alpha_variant", "epsilon", "T0", "saddle_T", "residual", "iterations"]
    _write_rows(os.path.join(out, "summary.csv"), keys, [[getattr(rep, k) for k in keys]])
    if rep.bead_actions is not None:
        _write_rows(os.path.join(out, "string.csv"), ["bead", "action"], list(enumerate(rep.bead_actions)))
    if rep.saddle is not None:
        path_to_csv(rep.saddle, os.path.join(out, "saddle.csv"))
    if plots and rep.bead_actions is not None:
        from .plotting import plot_paths, plot_string
        plot_string(rep.bead_actions, rep.alpha, os.path.join(out, "string.png"), f"k = {scen.k:g}")
        plot_paths(scen.model, [rep.saddle, rep.head], scen.Q0, scen.Q1, os.path.join(out, "saddle.png"),
                   "saddle (path 0) and head (path 1)")
    passed = rep.converged and rep.minimax >= rep.alpha
    return passed, {"verdict": rep.verdict, "minimax": rep.minimax, "alpha": rep.alpha, "message": rep.message}


def task_struwe_scan(cfg, scen, out, plots, threads):
    curve = struwe_scan(scen.model, scen.Q0, scen.Q1, scen.omega, scen.k_grid, _string_cfg(cfg), scen.epsilon)
    curve.to_csv(os.path.join(out, "minimax.csv"))
    if plots:
        from .plotting import plot_minimax
        plot_minimax(curve, os.path.join(out, "minimax.png"), scen.name)
    flagged = [float(k) for k, ok in zip(curve.k, curve.converged) if not ok]
    passed = bool(curve.monotone) and bool(np.any(curve.converged))
    return passed, {"verdict": "MONOTONE" if curve.monotone else "NOT_MONOTONE", "flagged_k": flagged}


def task_brackets(cfg, scen, out, plots, threads):
    model, Q0, Q1 = scen.model, scen.Q0, scen.Q1
    tol, grid, seed = cfg.get("critical.tol"), cfg.get("critical.grid"), cfg.get("seed")
    brackets = []
    failures = []
    for which in cfg.get("critical.which"):
        try:
            if which == "k_N":
                b = critical.k_N_estimate(model, Q0, Q1, tol=tol)
            elif which == "k_obstruction":
                v = critical.k_obstruction(model, Q0, Q1)
                b = critical.CriticalBracket("k_obstruction", v, v, method="conormal_sampling")
            elif which == "e0":
                v = critical.e0(model)
                b = critical.CriticalBracket("e0", v, v, method="grid_max")
            else:
                b = critical.bracket_critical(model, which, tol=tol, Q0=Q0, Q1=Q1, grid=grid, seed=seed)
        except BracketError as exc:
            failures.append(f"{which}: {exc} (lower={exc.lower}, upper={exc.upper})")
            continue
        brackets.append(b)
        if not b.lower_certified:
            failures.append(f"{which}: {b.message}")
    critical.brackets_to_csv(brackets, os.path.join(out, "brackets.csv"), witness_dir=out)
    if plots and brackets:
        from .plotting import plot_brackets
        plot_brackets([(b.name, b.lower, b.upper) for b in brackets], os.path.join(out, "brackets.png"), scen.name)
    return not failures, {"verdict": "BRACKETED" if not failures else "INCOMPLETE", "failures": failures,
                          "brackets": {b.name: [b.lower, b.upper] for b in brackets}}


def task_chain_audit(cfg, scen, out, plots, threads):
    try:
        rep = critical.chain_audit(scen.model, scen.Q0, scen.Q1, brackets=scen.analytic_chain,
                                   tol=cfg.get("critical.tol"), strict=True)
        ok, msg = True, ""
    except ChainViolation as exc:
        rep = critical.chain_audit(scen.model, scen.Q0, scen.Q1, brackets=scen.analytic_chain,
                                   tol=cfg.get("critical.tol"), strict=False)
        ok, msg = False, str(exc)
    rep.to_csv(os.path.join(out, "chain.csv"))
    if plots:
        from .plotting import plot_brackets
        plot_brackets(rep.entries, os.path.join(out, "chain.png"), scen.name)
    return ok, {"verdict": "CHAIN_OK" if ok else "CHAIN_VIOLATED", "message": msg}


def task_no_connection(cfg, scen, out, plots, threads):
    if not (scen.Q0.is_point and scen.Q1.is_point):
        raise ConfigError("no_connection needs two point boundaries", "q0.kind")
    v = no_connection_certificate(scen.model, scen.Q0.point, scen.Q1.point, scen.k)
    _write_rows(os.path.join(out, "no_connection.csv"),
                ["k", "I0_lo", "I0_hi", "I1_lo", "I1_hi", "gap", "verdict", "contact"],
                [[scen.k, *v.range0, *v.range1, v.gap, v.verdict, int(v.contact)]])
    if plots:
        from .plotting import plot_ranges
        plot_ranges(scen.k, v.range0, v.range1, os.path.join(out, "no_connection.png"))
    return True, {"verdict": v.verdict, "contact": v.contact}


def task_reproduce(cfg, scen, out, plots, threads, names=None):
    name = cfg.get("name") if cfg is not None else None
    names = names or ([name] if name else None)
    rows = reproduce_suite(names, threads=threads)
    rows_to_csv(rows, os.path.join(out, "reproduce.csv"))
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:22s} {r.quantity}: computed {r.as_list()[3]} "
              f"expected {r.as_list()[2]} (tol {r.tolerance:g})")
    failed = [r.name for r in rows if not r.passed]
    return not failed, {"verdict": "ALL_PASS" if not failed else "FAILURES", "failed": sorted(set(failed))}


TASKS = {
    "minimize": task_minimize,
    "mountain_pass": task_mountain_pass,
    "struwe_scan": task_struwe_scan,
    "brackets": task_brackets,
    "chain_audit": task_chain_audit,
    "no_connection": task_no_connection,
    "reproduce": task_reproduce,
}


def _finish(out, task, scenario, passed, info):
    code = EXIT_OK if passed else EXIT_FAIL
    doc = {"task": task, "scenario": scenario, "status": "PASS" if passed else "FAIL", "exit_code": code}
    doc.update(info)
    with open(os.path.join(out, "verdict.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o))
        f.write("\n")
    return code


def run_scenario(config_path: str, seed=None, out_dir=None, threads=1, plots=True) -> int:
    """Load, validate and execute one scenario config; returns the exit status."""
    overrides = {}
    if seed is not None:
        overrides["seed"] = int(seed)
    try:
        cfg = load_config(config_path, overrides)
        scen = build_scenario(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = out_dir or cfg.get("out_dir")
    os.makedirs(out, exist_ok=True)
    plots = plots and cfg.get("plots")
    try:
        passed, info = TASKS[cfg.task](cfg, scen, out, plots, threads)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConorbitError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _finish(out, cfg.task, scen.name, False, {"verdict": "ERROR", "message": str(exc)})
    code = _finish(out, cfg.task, scen.name, passed, info)
    print(f"{cfg.task} [{scen.name}]: {'PASS' if passed else 'FAIL'} -> {out}")
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="conorbit", description="Conormal orbits and critical energy values")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", default=None, help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
        sp.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
        sp.add_argument("-v", "--verbose", action="store_true")

    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None)
    common(r)
    rp = sub.add_parser("reproduce", help="run the reproduction fixtures")
    rp.add_argument("names", nargs="*")
    rp.add_argument("--seed", type=int, default=None, help="accepted for symmetry; fixtures are deterministic")
    common(rp)
    sub.add_parser("list-models", help="print the model catalog")
    sub.add_parser("list-scenarios", help="print the built-in scenarios")
    sub.add_parser("schema", help="print the config schema")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-models":
        for name, desc in list_models():
            print(f"{name:22s} {desc}")
        return EXIT_OK
    if args.command == "list-scenarios":
        for name, desc in list_scenarios():
            print(f"{name:26s} {desc}")
        return EXIT_OK
    if args.command == "schema":
        sys.stdout.write(schema_text())
        return EXIT_OK
    if args.threads < 1:
        print("configuration error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "run":
        return run_scenario(args.config, args.seed, args.out_dir, args.threads, not args.no_plots)
    out = args.out_dir or "out/reproduce"
    os.makedirs(out, exist_ok=True)
    try:
        passed, info = task_reproduce(None, None, out, not args.no_plots, args.threads, names=args.names or None)
    except KeyError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _finish(out, "reproduce", "suite", passed, info)


if __name__ == "__main__":
    sys.exit(main())
