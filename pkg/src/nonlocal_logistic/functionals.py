"""Scalar functionals of the non-local flow.

The nonlinearity is evaluated on ``pos(u) = max(u, 0)`` so that real,
non-integer exponents stay defined on small negative undershoots.
"""
from __future__ import annotations

from dataclasses import dataclass, astuple, fields as dc_fields
from typing import Sequence

import numpy as np

from .fields import ModelParams
from .grid import Grid, dirichlet_energy, inner, integrate, laplacian

__all__ = [
    "DiagnosticsRecord",
    "pos",
    "mass",
    "lambda_of",
    "lambda_tilde",
    "lyapunov",
    "local_energy",
    "energy_identity_residual",
    "EnergyIdentityTracker",
    "steady_residual",
]


def pos(u):
    return np.maximum(u, 0.0)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    lam: float
    mass: float
    lyapunov: float
    lambda_tilde: float
    u_min: float
    identity_residual: float
    step_change_rate: float

    HEADER = (
        "t,lambda,mass,lyapunov,lambda_tilde,u_min,identity_residual,step_change_rate"
    )

    def as_tuple(self) -> tuple:
        return astuple(self)


def _require_nonlocal(params: ModelParams):
    if not params.p > 1:
        raise ValueError(f"exponent must satisfy p>1, got p={params.p}")


def mass(grid: Grid, u) -> float:
    return inner(grid, u, u)


def lambda_of(grid: Grid, u, params: ModelParams) -> float:
    """Mass-preserving multiplier ``int |grad u|^2 + a (u^{p+1} - u^2)``.

    The denominator is the initial mass, fixed to 1.
    """
    _require_nonlocal(params)
    u = grid.check(u)
    reaction = params.a * (pos(u) ** (params.p + 1) - u * u)
    return dirichlet_energy(grid, u) + integrate(grid, reaction)


def lambda_tilde(grid: Grid, u, params: ModelParams) -> float:
    _require_nonlocal(params)
    u = grid.check(u)
    return dirichlet_energy(grid, u) + params.M_disc * integrate(
        grid, pos(u) ** (params.p + 1)
    )


def lyapunov(grid: Grid, u, params: ModelParams) -> float:
    """``F(u) = 1/2 int |grad u|^2 + 1/(p+1) int a u^{p+1} - 1/2 int a u^2``."""
    _require_nonlocal(params)
    u = grid.check(u)
    p = params.p
    density = params.a * (pos(u) ** (p + 1) / (p + 1) - 0.5 * u * u)
    return 0.5 * dirichlet_energy(grid, u) + integrate(grid, density)


def local_energy(grid: Grid, u, params: ModelParams) -> float:
    """Energy of the local logistic flow ``u_t = lap u + r u (1 - u/K)``."""
    u = grid.check(u)
    r, K = params.r, params.K
    return 0.5 * dirichlet_energy(grid, u) - r * integrate(
        grid, 0.5 * u * u - u**3 / (3.0 * K)
    )


def _energy(grid, u, params):
    if params.mode == "local":
        return local_energy(grid, u, params)
    return lyapunov(grid, u, params)


class EnergyIdentityTracker:
    """Running residual of the energy identity along a discrete trajectory.

    With ``F`` the Lyapunov functional the identity reads
    ``lambda(t) + 2 int_0^t |u_t|^2 = 2 F(g) + (p-1)/(p+1) int a u^{p+1}``,
    which is the same as ``2 F(u(t)) - 2 F(g) + 2 int_0^t |u_t|^2 = 0``.
    ``u_t`` is the backward difference quotient on each step.
    """

    def __init__(self, grid: Grid, g, params: ModelParams):
        self.grid = grid
        self.params = params
        self.F0 = _energy(grid, g, params)
        self.dissipation = 0.0  # int_0^t |u_t|^2 dt

    def update(self, u_prev, u_next, dt: float) -> None:
        d = np.asarray(u_next) - np.asarray(u_prev)
        self.dissipation += inner(self.grid, d, d) / dt

    def residual(self, u, F=None) -> float:
        if F is None:
            F = _energy(self.grid, u, self.params)
        return 2.0 * (F - self.F0) + 2.0 * self.dissipation


def energy_identity_residual(
    grid: Grid, times: Sequence[float], states: Sequence, params: ModelParams
) -> np.ndarray:
    """Residual ``LHS - RHS`` of the energy identity at every history entry.

    ``times[0]`` must be 0 with ``states[0]`` the initial datum.
    """
    if len(times) == 0 or len(states) != len(times):
        raise ValueError("history must be nonempty with one state per time")
    g = grid.check(states[0])
    tracker = EnergyIdentityTracker(grid, g, params)
    out = np.empty(len(times))
    nonlocal_mode = params.mode != "local"
    coeff = (params.p - 1) / (params.p + 1)
    for i, u in enumerate(states):
        u = grid.check(u)
        if i > 0:
            tracker.update(states[i - 1], u, times[i] - times[i - 1])
        if nonlocal_mode:
            lhs = lambda_of(grid, u, params) + 2.0 * tracker.dissipation
            rhs = 2.0 * tracker.F0 + coeff * integrate(
                grid, params.a * pos(u) ** (params.p + 1)
            )
            out[i] = lhs - rhs
        else:
            out[i] = tracker.residual(u)
    return out


def steady_residual(grid: Grid, u, lam: float, params: ModelParams) -> float:
    """Weighted L2 norm of ``lap u + lam u + a (u - u^p)``."""
    u = grid.check(u)
    res = laplacian(grid, u) + lam * u + params.a * (u - pos(u) ** params.p)
    return float(np.sqrt(inner(grid, res, res)))


RECORD_FIELDS = tuple(f.name for f in dc_fields(DiagnosticsRecord))
