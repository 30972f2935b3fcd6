"""Experiment harnesses: steady states, stability of pairs, self-convergence."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .evolve import SolverConfig, initial_state, rk4_oracle_step, trajectory
from .fields import ModelParams, build_initial, normalize
from .functionals import mass, steady_residual
from .grid import Grid, dirichlet_energy, inner

__all__ = [
    "SteadyState",
    "StabilityReport",
    "ConvergenceReport",
    "run_to_steady",
    "compare_trajectories",
    "stability_experiment",
    "fit_growth_constant",
    "least_squares_rate",
    "convergence_study",
    "restrict",
    "oracle_solution",
]


@dataclass(frozen=True, eq=False)
class SteadyState:
    u_inf: np.ndarray
    lambda_inf: float
    residual: float
    t_reached: float
    converged: bool
    times: np.ndarray = field(default=None, repr=False)
    lambdas: np.ndarray = field(default=None, repr=False)
    records: list = field(default_factory=list, repr=False)


@dataclass(frozen=True, eq=False)
class StabilityReport:
    times: np.ndarray
    l2_div: np.ndarray
    h1_div: np.ndarray
    c1_fit: float
    c2_fit: float
    c1_ls: float
    c2_ls: float
    bound_satisfied: tuple  # (l2, h1)
    resolved: tuple = (0, 0)  # samples above the round-off floor per series
    valid: bool = True


@dataclass(frozen=True)
class ConvergenceReport:
    kind: str  # "space" or "time"
    levels: tuple
    errors: tuple  # against the finest level
    differences: tuple  # between successive levels
    observed_orders: tuple


def run_to_steady(
    grid: Grid,
    g,
    params: ModelParams,
    cfg: SolverConfig,
    steady_tol: float = 1e-9,
    t_max: float = 20.0,
    record=None,
) -> SteadyState:
    """Evolve until ``||u^{n+1} - u^n|| / dt <= steady_tol`` or ``t >= t_max``.

    ``record(prev, state, trace)`` is called after every step if given.
    """
    if params.mode == "local":
        raise ValueError("steady-state search is defined for the non-local model")
    if not cfg.renormalize:
        raise ValueError("steady-state search needs renormalize=True")
    state = None
    times, lambdas = [0.0], [None]
    converged = False
    for prev, state, trace, rate in trajectory(grid, g, params, cfg, t_end=t_max):
        if lambdas[0] is None:
            lambdas[0] = prev.lam
        times.append(state.t)
        lambdas.append(state.lam)
        if record is not None:
            record(prev, state, trace)
        if rate <= steady_tol:
            converged = True
            break
    if state is None:
        raise ValueError("t_max must allow at least one step")
    m = mass(grid, state.u)
    if abs(m - 1.0) > 1e-10:
        raise RuntimeError(f"steady state lost unit mass: {m!r}")
    return SteadyState(
        u_inf=state.u,
        lambda_inf=state.lam,
        residual=steady_residual(grid, state.u, state.lam, params),
        t_reached=state.t,
        converged=converged,
        times=np.asarray(times),
        lambdas=np.asarray(lambdas),
    )


def least_squares_rate(times, series) -> float:
    """Slope ``c`` minimizing ``sum (log(s/s0) - c (t - t0))^2``."""
    t, y = _log_ratio(times, series)
    s = t - t[0]
    if not np.any(s > 0):
        return 0.0
    return float(np.dot(s, y) / np.dot(s, s))


def _log_ratio(times, series):
    t = np.asarray(times, dtype=float)
    s = np.asarray(series, dtype=float)
    if t.shape != s.shape or t.size == 0:
        raise ValueError("times and series must be nonempty and of equal length")
    if s[0] <= 0:
        return t[:1], np.zeros(1)
    bad = np.flatnonzero(s <= 0)
    if bad.size:
        warnings.warn(
            f"series vanishes at t={t[bad[0]]:g}; fitting the positive prefix only",
            RuntimeWarning,
            stacklevel=3,
        )
        t, s = t[: bad[0]], s[: bad[0]]
    return t, np.log(s / s[0])


def fit_growth_constant(times, series) -> float:
    """Growth constant of the tightest envelope ``s0 exp(c (t - t0))``.

    This is the least-squares fit of ``log(s/s0)`` against elapsed time
    constrained to lie on or above every sample; since the unconstrained
    slope is a weighted mean of the pointwise rates, the constraint is
    always active and the result is ``max log(s/s0) / (t - t0)``. A zero
    series gives 0. Compare :func:`least_squares_rate` for the plain fit.
    """
    t, y = _log_ratio(times, series)
    s = t - t[0]
    pos = s > 0
    if not np.any(pos):
        return 0.0
    return float(np.max(y[pos] / s[pos]))


def _envelope_holds(times, series, c):
    t = np.asarray(times)
    s = np.asarray(series)
    return bool(np.all(s <= s[0] * np.exp(c * (t - t[0])) * (1 + 1e-6)))


def _resolved(series, floor):
    """Length of the prefix that stays above the round-off floor."""
    below = np.flatnonzero(np.asarray(series) <= floor)
    return int(below[0]) if below.size else len(series)


def compare_trajectories(
    grid: Grid, params: ModelParams, cfg: SolverConfig, g_u, g_v, t_end: float
) -> StabilityReport:
    """Run two trajectories side by side and record their divergence.

    ``l2_div`` is ``||u - v||^2`` and ``h1_div`` the squared gradient
    seminorm of ``u - v``, sampled at ``t=0``, every ``cfg.output_every``
    steps and at ``t_end``. Growth constants and envelope checks use the
    prefix of each series above its round-off floor, ``(1e3 eps)^2`` times
    the largest eigenvalue of ``-lap`` for the seminorm.
    """
    cfg = replace(cfg, t_end=t_end)
    d0 = np.asarray(g_u) - np.asarray(g_v)
    times, l2, h1 = [0.0], [inner(grid, d0, d0)], [dirichlet_energy(grid, d0)]
    valid = True
    run_u = trajectory(grid, g_u, params, cfg)
    run_v = trajectory(grid, g_v, params, cfg)
    try:
        for (_, su, _, _), (_, sv, _, _) in zip(run_u, run_v):
            k = su.step_index
            if k % cfg.output_every and su.t < t_end:
                continue
            d = su.u - sv.u
            times.append(su.t)
            l2.append(inner(grid, d, d))
            h1.append(dirichlet_energy(grid, d))
    except Exception as exc:  # either run aborting invalidates the pair
        warnings.warn(f"stability run aborted: {exc}", RuntimeWarning)
        valid = False
    times, l2, h1 = np.asarray(times), np.asarray(l2), np.asarray(h1)
    floor = (1e3 * np.finfo(float).eps) ** 2
    lap_max = sum(4.0 / h**2 for h in grid.h)
    n1 = max(_resolved(l2, floor), 1)
    n2 = max(_resolved(h1, floor * lap_max), 1)
    c1 = fit_growth_constant(times[:n1], l2[:n1])
    c2 = fit_growth_constant(times[:n2], h1[:n2])
    return StabilityReport(
        times=times,
        l2_div=l2,
        h1_div=h1,
        c1_fit=c1,
        c2_fit=c2,
        c1_ls=least_squares_rate(times[:n1], l2[:n1]),
        c2_ls=least_squares_rate(times[:n2], h1[:n2]),
        bound_satisfied=(
            _envelope_holds(times[:n1], l2[:n1], c1),
            _envelope_holds(times[:n2], h1[:n2], c2),
        ),
        resolved=(n1, n2),
        valid=valid,
    )


def stability_experiment(
    grid: Grid,
    params: ModelParams,
    cfg: SolverConfig,
    g,
    perturbation,
    t_end: float = 2.0,
    eps: float = 1.0,
) -> StabilityReport:
    """Compare the flow from ``g`` with the flow from ``normalize(g + eps * perturbation)``.

    Both data pass through ``normalize`` so a zero perturbation gives
    bitwise-identical trajectories.
    """
    g = grid.check(g)
    g_v = g + eps * grid.check(perturbation)
    if g_v.min() < 0:
        raise ValueError("perturbed initial datum is negative somewhere")
    return compare_trajectories(
        grid, params, cfg, normalize(grid, g), normalize(grid, g_v), t_end
    )


# -- self-convergence --------------------------------------------------------


def restrict(fine: Grid, coarse: Grid, u) -> np.ndarray:
    """Sample a fine-grid field at the nodes it shares with ``coarse``."""
    if fine.spec.mask is not None or coarse.spec.mask is not None:
        raise ValueError("restriction is only defined for unmasked grids")
    if fine.spec.extent != coarse.spec.extent:
        raise ValueError("grids cover different domains")
    slices = []
    for nf, nc in zip(fine.spec.n, coarse.spec.n):
        if (nf + 1) % (nc + 1):
            raise ValueError(f"grids do not nest: {nc} and {nf} interior nodes")
        r = (nf + 1) // (nc + 1)
        slices.append(slice(r - 1, None, r))
    return coarse.from_box(fine.to_box(u)[tuple(slices)])


def _order(diffs, ratios):
    out = []
    for d0, d1, r in zip(diffs[:-1], diffs[1:], ratios[1:]):
        if d0 > 0 and d1 > 0 and r > 1:
            out.append(math.log(d0 / d1) / math.log(r))
        else:
            out.append(float("nan"))
    return tuple(out)


def _norm(grid, u):
    return math.sqrt(inner(grid, u, u))


def convergence_study(
    base,
    space_levels: Optional[Sequence[int]] = None,
    time_levels: Optional[Sequence[float]] = None,
    t_compare: Optional[float] = None,
) -> dict:
    """Self-convergence of the solution at ``t_compare``.

    ``base`` is a :class:`~nonlocal_logistic.config.RunConfig`.
    ``space_levels`` are interior node counts per axis (cell counts must
    nest); ``time_levels`` are step sizes. Errors are measured against the
    finest level; observed orders come from successive-level differences.
    Returns ``{"space": report, "time": report}`` for the studies requested.
    """
    t_compare = base.solver.t_end if t_compare is None else t_compare
    out = {}
    if space_levels is not None:
        out["space"] = _space_study(base, tuple(space_levels), t_compare)
    if time_levels is not None:
        out["time"] = _time_study(base, tuple(time_levels), t_compare)
    return out


def _final(grid, params, g, cfg):
    state = None
    for _, state, _, _ in trajectory(grid, g, params, cfg):
        pass
    return g if state is None else state.u


def _space_study(base, levels, t_compare):
    if len(levels) < 3:
        raise ValueError("need at least 3 levels")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ValueError("space levels must be nondecreasing")
    cfg = replace(base.solver, t_end=t_compare)
    runs = []
    for n in levels:
        grid, params, g = base.build(n=n)
        runs.append((grid, _final(grid, params, g, cfg)))
    fine_grid, fine_u = runs[-1]
    errors, diffs = [], []
    for i, (grid, u) in enumerate(runs):
        errors.append(_norm(grid, u - restrict(fine_grid, grid, fine_u)))
        if i + 1 < len(runs):
            g2, u2 = runs[i + 1]
            diffs.append(_norm(grid, u - restrict(g2, grid, u2)))
    ratios = [1.0] + [(b + 1) / (a + 1) for a, b in zip(levels, levels[1:])]
    return ConvergenceReport("space", levels, tuple(errors), tuple(diffs), _order(diffs, ratios))


def _time_study(base, levels, t_compare):
    if len(levels) < 3:
        raise ValueError("need at least 3 levels")
    for a, b in zip(levels, levels[1:]):
        q = a / b
        if q < 1 or abs(q - round(q)) > 1e-9:
            raise ValueError(f"time levels do not nest: {a} then {b}")
    for dt in levels:
        q = t_compare / dt
        if abs(q - round(q)) > 1e-9 * max(q, 1):
            raise ValueError(f"t_compare={t_compare} is not a multiple of dt={dt}")
    grid, params, g = base.build()
    finals = [
        _final(grid, params, g, replace(base.solver, dt=dt, t_end=t_compare))
        for dt in levels
    ]
    errors = [_norm(grid, u - finals[-1]) for u in finals]
    diffs = [_norm(grid, a - b) for a, b in zip(finals, finals[1:])]
    ratios = [1.0] + [a / b for a, b in zip(levels, levels[1:])]
    return ConvergenceReport("time", levels, tuple(errors), tuple(diffs), _order(diffs, ratios))


def oracle_solution(grid: Grid, g, params: ModelParams, dt: float, t_end: float):
    """Explicit RK4 reference solution at ``t_end`` (no projection)."""
    cfg = SolverConfig(dt=dt, t_end=t_end, renormalize=False, scheme="rk4")
    state = initial_state(grid, g, params)
    n = int(np.ceil(t_end / dt - 1e-9))
    for k in range(1, n + 1):
        step_dt = (t_end - state.t) if k == n else dt
        state = rk4_oracle_step(grid, state, params, cfg, step_dt)
    return state.u
