"""Numerical laboratory for a mass-preserving non-local logistic equation.

The flow ``u_t = lap u + lambda(t) u + a(x) (u - u^p)`` on a bounded domain
with ``u = 0`` on the boundary keeps ``int u^2 = 1`` through the multiplier
``lambda(t) = int |grad u|^2 + a (u^{p+1} - u^2)``.

>>> from nonlocal_logistic import DomainSpec, build_grid, CoefficientSpec
>>> grid = build_grid(DomainSpec(dim=1, extent=1.0, n=63))
"""
from .analysis import (
    ConvergenceReport,
    StabilityReport,
    SteadyState,
    compare_trajectories,
    convergence_study,
    fit_growth_constant,
    run_to_steady,
    stability_experiment,
)
from .config import ConfigError, RunConfig, dump_config, load_config, parse_config
from .evolve import (
    LinearSolveError,
    NumericalAbort,
    PicardConfig,
    PicardTrace,
    SolverConfig,
    State,
    evolve,
    imex_step,
    initial_state,
    local_baseline_step,
    picard_step,
    rk4_oracle_step,
    solve_helmholtz,
    trajectory,
)
from .fields import (
    CoefficientSpec,
    InitialSpec,
    ModelParams,
    build_coefficient,
    build_initial,
    make_params,
    normalize,
)
from .functionals import (
    DiagnosticsRecord,
    energy_identity_residual,
    lambda_of,
    lambda_tilde,
    lyapunov,
    mass,
    steady_residual,
)
from .grid import (
    DomainSpec,
    Grid,
    build_grid,
    dirichlet_energy,
    discrete_eigenvalue_1d,
    first_eigenvector,
    integrate,
    laplacian,
)

__version__ = "0.1.0"
