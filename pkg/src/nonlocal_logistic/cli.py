"""Command line entry point.

Usage::

    nonlocal-logistic {run,steady,stability,convergence,oracle-check} \\
        --config CONFIG [--out DIR] [--seed SEED]

Exit codes: 0 success, 1 validation error, 2 numerical abort,
3 non-convergence or failed check.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import analysis
from .config import ConfigError, RunConfig, dump_config, load_config
from .evolve import (
    LinearSolveError,
    NumericalAbort,
    diagnostics,
    evolve,
    initial_state,
)
from .functionals import EnergyIdentityTracker
from .grid import first_eigenvector
from .output import emit_outputs, write_table

COMMANDS = ("run", "steady", "stability", "convergence", "oracle-check")

EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_UNCONVERGED = 0, 1, 2, 3


class _Collector:
    """Sink keeping diagnostics records and the requested snapshots."""

    def __init__(self, snapshot_every=0):
        self.records = []
        self.snapshots = []
        self.snapshot_every = snapshot_every
        self.last = None

    def __call__(self, record, state):
        self.records.append(record)
        k = state.step_index
        if k == 0 or (self.snapshot_every and k % self.snapshot_every == 0):
            self.snapshots.append((k, state.u))
        self.last = state

    def finish(self):
        if self.last is not None and (not self.snapshots or self.snapshots[-1][0] != self.last.step_index):
            self.snapshots.append((self.last.step_index, self.last.u))


def _mark_failure(out_dir, message):
    with open(os.path.join(out_dir, "FAILED"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(message.rstrip("\n") + "\n")


def _reference_eigenvalue(grid):
    return first_eigenvector(grid)[0]


def _cmd_run(cfg, problem, out_dir, text):
    grid, params, g = problem
    sink = _Collector(cfg.snapshot_every)
    try:
        evolve(grid, g, params, cfg.solver, sinks=[sink])
    finally:
        sink.finish()
        emit_outputs(sink.records, sink.snapshots, out_dir, grid,
                     _final_scalars(sink), text)
    return EXIT_OK


def _final_scalars(sink):
    if not sink.records:
        return {}
    r = sink.records[-1]
    return {
        "t": r.t,
        "lambda": r.lam,
        "mass": r.mass,
        "lyapunov": r.lyapunov,
        "lambda_tilde": r.lambda_tilde,
        "u_min": r.u_min,
        "identity_residual": r.identity_residual,
        "records": len(sink.records),
    }


def _cmd_steady(cfg, problem, out_dir, text):
    grid, params, g = problem
    tracker = EnergyIdentityTracker(grid, g, params)
    records = [diagnostics(grid, initial_state(grid, g, params), params, tracker, 0.0)]
    last = {}

    def record(prev, state, trace):
        tracker.update(prev.u, state.u, state.t - prev.t)
        d = state.u - prev.u
        rate = float(np.sqrt(np.dot(grid.weights, d * d))) / (state.t - prev.t)
        last["rec"] = diagnostics(grid, state, params, tracker, rate)
        if state.step_index % cfg.solver.output_every == 0:
            records.append(last["rec"])

    try:
        ss = analysis.run_to_steady(grid, g, params, cfg.solver, cfg.steady_tol,
                                    cfg.t_max, record=record)
    except (NumericalAbort, LinearSolveError):
        emit_outputs(records, [], out_dir, grid, None, text)
        raise
    if "rec" in last and records[-1] is not last["rec"]:
        records.append(last["rec"])
    n_steps = len(ss.times) - 1
    summary = {
        "converged": ss.converged,
        "t_reached": ss.t_reached,
        "lambda_inf": ss.lambda_inf,
        "steady_residual": ss.residual,
        "mass": float(np.dot(grid.weights, ss.u_inf**2)),
        "mu1_discrete": _reference_eigenvalue(grid),
    }
    emit_outputs(records, [(n_steps, ss.u_inf)], out_dir, grid, summary, text)
    return EXIT_OK if ss.converged else EXIT_UNCONVERGED


def _cmd_stability(cfg, problem, out_dir, text):
    grid, params, g = problem
    delta = cfg.build_perturbation(grid)
    rep = analysis.stability_experiment(
        grid, params, cfg.solver, g, delta, cfg.stability_t_end, cfg.eps
    )
    sink = _Collector()
    evolve(grid, g, params, replace(cfg.solver, t_end=cfg.stability_t_end), sinks=[sink])
    summary = {
        "valid": rep.valid,
        "c1_fit": rep.c1_fit,
        "c2_fit": rep.c2_fit,
        "c1_least_squares": rep.c1_ls,
        "c2_least_squares": rep.c2_ls,
        "l2_bound_satisfied": rep.bound_satisfied[0],
        "h1_bound_satisfied": rep.bound_satisfied[1],
        "l2_div_0": rep.l2_div[0],
    }
    emit_outputs(sink.records, [], out_dir, grid, summary, text)
    write_table(os.path.join(out_dir, "stability.csv"), "t,l2_div,h1_div",
                [rep.times, rep.l2_div, rep.h1_div])
    ok = rep.valid and all(rep.bound_satisfied)
    return EXIT_OK if ok else EXIT_UNCONVERGED


def _cmd_convergence(cfg, problem, out_dir, text):
    grid, params, g = problem
    t_compare = cfg.solver.t_end if cfg.t_compare is None else cfg.t_compare
    reports = analysis.convergence_study(cfg, cfg.space_levels, cfg.time_levels, t_compare)
    sink = _Collector()
    evolve(grid, g, params, replace(cfg.solver, t_end=t_compare), sinks=[sink])
    summary = {}
    for kind, rep in reports.items():
        write_table(os.path.join(out_dir, f"convergence_{kind}.csv"), "level,error",
                    [rep.levels, rep.errors])
        summary[f"{kind}_differences"] = ", ".join("%.17g" % x for x in rep.differences)
        summary[f"{kind}_orders"] = ", ".join("%.17g" % x for x in rep.observed_orders)
    emit_outputs(sink.records, [], out_dir, grid, summary, text)
    return EXIT_OK


def _cmd_oracle(cfg, problem, out_dir, text):
    grid, params, g = problem
    imex_cfg = replace(cfg.solver, dt=cfg.oracle_imex_dt, t_end=cfg.oracle_t_end,
                       renormalize=False, scheme="imex",
                       picard=replace(cfg.solver.picard, enabled=False))
    sink = _Collector()
    u_imex = evolve(grid, g, params, imex_cfg, sinks=[sink]).u
    u_rk4 = analysis.oracle_solution(grid, g, params, cfg.oracle_dt, cfg.oracle_t_end)
    dev = float(np.max(np.abs(u_imex - u_rk4)))
    passed = dev <= cfg.oracle_threshold
    print(f"oracle-check: max |u_imex - u_rk4| = {dev:.3e} "
          f"(threshold {cfg.oracle_threshold:g}) {'PASS' if passed else 'FAIL'}")
    summary = {"max_linf_deviation": dev, "threshold": cfg.oracle_threshold,
               "passed": passed}
    emit_outputs(sink.records, [], out_dir, grid, summary, text)
    return EXIT_OK if passed else EXIT_UNCONVERGED


HANDLERS = {
    "run": _cmd_run,
    "steady": _cmd_steady,
    "stability": _cmd_stability,
    "convergence": _cmd_convergence,
    "oracle-check": _cmd_oracle,
}


def _prepare_dir(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write-test")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output directory {out_dir!r} is not writable: {exc}") from None
    stale = os.path.join(out_dir, "FAILED")
    if os.path.exists(stale):
        os.remove(stale)


def run_command(cfg: RunConfig, subcommand: str, out_dir=None) -> int:
    if subcommand not in HANDLERS:
        print(f"unknown command {subcommand!r}", file=sys.stderr)
        return EXIT_INVALID
    out_dir = cfg.output_dir if out_dir is None else out_dir
    try:
        _prepare_dir(out_dir)
        problem = cfg.build()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = dump_config(cfg)
    with open(os.path.join(out_dir, "effective_config.ini"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    try:
        code = HANDLERS[subcommand](cfg, problem, out_dir, text)
    except (NumericalAbort, LinearSolveError) as exc:
        _mark_failure(out_dir, f"numerical abort: {exc}")
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    if code != EXIT_OK:
        _mark_failure(out_dir, f"{subcommand} finished with exit code {code}")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nonlocal-logistic", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the INI config")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be nonnegative", file=sys.stderr)
            return EXIT_INVALID
        cfg = replace(cfg, seed=args.seed)
    return run_command(cfg, args.command, args.out)


if __name__ == "__main__":
    sys.exit(main())
