"""Time integration of the non-local logistic flow.

The production scheme is first-order IMEX: diffusion implicit, the
multiplier term and the reaction explicit, followed by projection back to
unit mass. ``picard_step`` iterates the frozen-multiplier linear update
inside one step, and ``rk4_oracle_step`` is an explicit reference
integrator of the same semi-discrete system.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Optional

import numpy as np
import scipy.linalg

from .fields import ModelParams, normalize
from .functionals import (
    DiagnosticsRecord,
    EnergyIdentityTracker,
    lambda_of,
    lambda_tilde,
    local_energy,
    lyapunov,
    mass,
    pos,
)
from .grid import Grid, inner

__all__ = [
    "NumericalAbort",
    "LinearSolveError",
    "PicardConfig",
    "SolverConfig",
    "State",
    "PicardTrace",
    "conjugate_gradient",
    "solve_helmholtz",
    "initial_state",
    "imex_step",
    "picard_step",
    "rk4_oracle_step",
    "local_baseline_step",
    "step",
    "trajectory",
    "evolve",
    "diagnostics",
]


class NumericalAbort(RuntimeError):
    """A step produced non-finite values or a zero-mass field."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class LinearSolveError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PicardConfig:
    enabled: bool = False
    tol: float = 1e-10
    max_iter: int = 50


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    renormalize: bool = True
    picard: PicardConfig = field(default_factory=PicardConfig)
    linear_tol: float = 1e-10
    output_every: int = 1
    nan_abort: bool = True
    scheme: str = "imex"  # or "rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if not self.linear_tol > 0 or not self.picard.tol > 0:
            raise ValueError("tolerances must be positive")
        if self.picard.max_iter < 1:
            raise ValueError("picard max_iter must be >= 1")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if self.scheme not in ("imex", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class State:
    t: float
    u: np.ndarray
    lam: float
    step_index: int = 0


@dataclass
class PicardTrace:
    lambdas: list = field(default_factory=list)
    differences: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.differences)


# -- linear solves ---------------------------------------------------------


def conjugate_gradient(apply, b, x0=None, tol=1e-10, max_iter=None):
    """Plain CG for a symmetric positive definite operator.

    Returns ``(x, relative_residual, iterations)``; raises
    :class:`LinearSolveError` if ``tol`` is not reached.
    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0.0, 0
    if max_iter is None:
        max_iter = 10 * b.size
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x)
    d = r.copy()
    rr = r @ r
    for it in range(max_iter + 1):
        res = np.sqrt(rr) / bnorm
        if res <= tol:
            return x, res, it
        if it == max_iter:
            break
        Ad = apply(d)
        alpha = rr / (d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        rr_new = r @ r
        d = r + (rr_new / rr) * d
        rr = rr_new
    raise LinearSolveError(
        f"CG did not reach relative residual {tol:g} in {max_iter} iterations "
        f"(achieved {res:.3e})",
        res,
    )


def _banded_1d(grid, dt):
    n = grid.size
    h2 = grid.h[0] ** 2
    ab = np.empty((3, n))
    ab[0, :] = -dt / h2
    ab[1, :] = 1.0 + 2.0 * dt / h2
    ab[2, :] = -dt / h2
    return ab


def solve_helmholtz(grid: Grid, dt: float, rhs, tol: float = 1e-10, method="auto"):
    """Solve ``(I - dt lap) v = rhs``.

    ``method="auto"`` uses banded elimination in 1D and CG in 2D; ``"cg"``
    forces the iterative path.
    """
    rhs = grid.check(rhs)
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return rhs.copy()
    if method == "auto" and grid.dim == 1:
        return scipy.linalg.solve_banded(
            (1, 1), _banded_1d(grid, dt), rhs, check_finite=False
        )

    lap = grid.lap

    def apply(v):
        return v - dt * (lap @ v)

    v, _, _ = conjugate_gradient(apply, rhs, x0=rhs, tol=tol)
    return v


# -- steppers ---------------------------------------------------------------


def _reaction(u, params: ModelParams):
    if params.mode == "local":
        return params.r * u * (1.0 - u / params.K)
    return params.a * (u - pos(u) ** params.p)


def _lam(grid, u, params):
    return lambda_of(grid, u, params) if params.mode != "local" else 0.0


def initial_state(grid: Grid, g, params: ModelParams) -> State:
    u = np.array(grid.check(g), dtype=float)
    return State(t=0.0, u=u, lam=_lam(grid, u, params), step_index=0)


def _finish(grid, state, u_star, params, dt, renormalize):
    if not np.all(np.isfinite(u_star)):
        raise NumericalAbort(
            f"non-finite values after step {state.step_index + 1} (t={state.t + dt:g})",
            state,
        )
    if renormalize:
        if not mass(grid, u_star) > 0:
            raise NumericalAbort("zero mass after step", state)
        u_star = normalize(grid, u_star)
    return State(
        t=state.t + dt,
        u=u_star,
        lam=_lam(grid, u_star, params),
        step_index=state.step_index + 1,
    )


def _imex_update(grid, u, lam, params, dt, tol):
    rhs = u + dt * (lam * u + _reaction(u, params))
    return solve_helmholtz(grid, dt, rhs, tol)


def imex_step(grid: Grid, state: State, params: ModelParams, cfg: SolverConfig,
              dt: Optional[float] = None) -> State:
    dt = cfg.dt if dt is None else dt
    u_star = _imex_update(grid, state.u, state.lam, params, dt, cfg.linear_tol)
    return _finish(grid, state, u_star, params, dt, cfg.renormalize)


def picard_step(grid: Grid, state: State, params: ModelParams, cfg: SolverConfig,
                dt: Optional[float] = None) -> tuple[State, PicardTrace]:
    """One step with the multiplier corrected by fixed-point iteration.

    Iterate ``k``: solve the IMEX update with the multiplier frozen at
    ``lambda^(k)``, then set ``lambda^(k+1)`` from the new iterate. The first
    iterate uses ``lambda(u^n)``, so ``max_iter=1`` is exactly ``imex_step``.
    """
    dt = cfg.dt if dt is None else dt
    trace = PicardTrace(lambdas=[state.lam])
    lam_k = state.lam
    for _ in range(cfg.picard.max_iter):
        u_star = _imex_update(grid, state.u, lam_k, params, dt, cfg.linear_tol)
        new = _finish(grid, state, u_star, params, dt, cfg.renormalize)
        diff = abs(new.lam - lam_k)
        trace.lambdas.append(new.lam)
        trace.differences.append(diff)
        if diff <= cfg.picard.tol:
            trace.converged = True
            break
        lam_k = new.lam
    if not trace.converged:
        warnings.warn(
            f"Picard iteration not converged at t={new.t:g}: "
            f"|dlambda|={trace.differences[-1]:.3e} after {trace.iterations} iterations",
            RuntimeWarning,
            stacklevel=2,
        )
    return new, trace


def _mol_rhs(grid, u, params):
    lam = _lam(grid, u, params)
    return grid.lap @ u + lam * u + _reaction(u, params)


def rk4_oracle_step(grid: Grid, state: State, params: ModelParams, cfg: SolverConfig,
                    dt: Optional[float] = None) -> State:
    """Classical RK4 on ``u' = lap u + lambda(u) u + a (u - u^p)``.

    Explicit: stable only for roughly ``dt <= h^2 / 4``. No projection.
    """
    dt = cfg.dt if dt is None else dt
    u = state.u
    k1 = _mol_rhs(grid, u, params)
    k2 = _mol_rhs(grid, u + 0.5 * dt * k1, params)
    k3 = _mol_rhs(grid, u + 0.5 * dt * k2, params)
    k4 = _mol_rhs(grid, u + dt * k3, params)
    u_new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _finish(grid, state, u_new, params, dt, renormalize=False)


def local_baseline_step(grid: Grid, state: State, params: ModelParams,
                        cfg: SolverConfig, dt: Optional[float] = None) -> State:
    """IMEX step of the local logistic equation; mass is not conserved."""
    if params.mode != "local":
        raise ValueError("local_baseline_step needs mode='local'")
    dt = cfg.dt if dt is None else dt
    u = state.u
    rhs = u + dt * _reaction(u, params)
    u_star = solve_helmholtz(grid, dt, rhs, cfg.linear_tol)
    return _finish(grid, state, u_star, params, dt, renormalize=False)


def step(grid: Grid, state: State, params: ModelParams, cfg: SolverConfig,
         dt: Optional[float] = None):
    """Dispatch to the configured stepper; returns ``(state, trace_or_None)``."""
    if params.mode == "local":
        return local_baseline_step(grid, state, params, cfg, dt), None
    if cfg.scheme == "rk4":
        return rk4_oracle_step(grid, state, params, cfg, dt), None
    if cfg.picard.enabled:
        return picard_step(grid, state, params, cfg, dt)
    return imex_step(grid, state, params, cfg, dt), None


# -- driver -----------------------------------------------------------------


def diagnostics(grid: Grid, state: State, params: ModelParams,
                tracker: EnergyIdentityTracker, rate: float) -> DiagnosticsRecord:
    u = state.u
    if params.mode == "local":
        F = local_energy(grid, u, params)
        lam_t = 0.0
    else:
        F = lyapunov(grid, u, params)
        lam_t = lambda_tilde(grid, u, params)
    return DiagnosticsRecord(
        t=state.t,
        lam=state.lam,
        mass=mass(grid, u),
        lyapunov=F,
        lambda_tilde=lam_t,
        u_min=float(u.min()),
        identity_residual=tracker.residual(u, F),
        step_change_rate=rate,
    )


def _step_count(cfg):
    n = int(np.ceil(cfg.t_end / cfg.dt - 1e-9))
    return max(n, 0)


def trajectory(grid: Grid, g, params: ModelParams, cfg: SolverConfig,
               t_end: Optional[float] = None) -> Iterator[tuple]:
    """Yield ``(previous, current, trace, rate)`` for every step up to ``t_end``.

    ``rate`` is ``||u^{n+1} - u^n|| / dt``. The final step is shortened so
    the run lands on ``t_end`` exactly.
    """
    t_end = cfg.t_end if t_end is None else t_end
    if params.mode != "local":
        m = mass(grid, g)
        if abs(m - 1.0) > 1e-12:
            raise ValueError(f"initial datum must have unit mass, got {m!r}")
    state = initial_state(grid, g, params)
    n_steps = _step_count(replace(cfg, t_end=t_end))
    for k in range(1, n_steps + 1):
        t_next = t_end if k == n_steps else k * cfg.dt
        dt = t_next - state.t
        new, trace = step(grid, state, params, cfg, dt)
        new = replace(new, t=t_next)
        d = new.u - state.u
        rate = np.sqrt(inner(grid, d, d)) / dt
        yield state, new, trace, rate
        state = new


def evolve(
    grid: Grid,
    g,
    params: ModelParams,
    cfg: SolverConfig,
    sinks: Iterable[Callable] = (),
    on_step: Optional[Callable] = None,
) -> State:
    """Integrate from ``t=0`` to ``cfg.t_end``.

    Every ``cfg.output_every`` steps and at the final time each sink is
    called as ``sink(record, state)``. ``on_step(previous, current, trace)``
    runs after every step. On :class:`NumericalAbort` sinks keep what they
    received and the exception carries the last valid state.
    """
    sinks = list(sinks)
    state = initial_state(grid, g, params)
    tracker = EnergyIdentityTracker(grid, state.u, params)
    record = diagnostics(grid, state, params, tracker, 0.0)
    for sink in sinks:
        sink(record, state)
    n_steps = _step_count(cfg)
    try:
        for prev, state, trace, rate in trajectory(grid, g, params, cfg):
            tracker.update(prev.u, state.u, state.t - prev.t)
            if on_step is not None:
                on_step(prev, state, trace)
            k = state.step_index
            if k % cfg.output_every == 0 or k == n_steps:
                record = diagnostics(grid, state, params, tracker, rate)
                for sink in sinks:
                    sink(record, state)
    except NumericalAbort:
        if not cfg.nan_abort:
            warnings.warn("numerical abort; returning last valid state", RuntimeWarning)
            return state
        raise
    return state
