import math

import numpy as np
import pytest

from nonlocal_logistic.analysis import (
    compare_trajectories,
    convergence_study,
    fit_growth_constant,
    least_squares_rate,
    oracle_solution,
    restrict,
    run_to_steady,
    stability_experiment,
)
from nonlocal_logistic.config import RunConfig
from nonlocal_logistic.evolve import SolverConfig, evolve
from nonlocal_logistic.fields import CoefficientSpec, InitialSpec, build_initial, make_params
from nonlocal_logistic.functionals import steady_residual
from nonlocal_logistic.grid import DomainSpec, build_grid, first_eigenvector


# -- growth fits ---------------------------------------------------------------


def test_fit_pure_exponential():
    t = np.linspace(0, 1, 11)
    assert fit_growth_constant(t, np.exp(3 * t)) == pytest.approx(3.0, rel=1e-12)
    assert least_squares_rate(t, np.exp(3 * t)) == pytest.approx(3.0, rel=1e-12)


def test_fit_zero_series():
    t = np.linspace(0, 1, 5)
    assert fit_growth_constant(t, np.zeros(5)) == 0.0


def test_fit_is_tightest_envelope():
    t = np.linspace(0.1, 1.0, 10)
    s = t * np.exp(2 * t)
    c = fit_growth_constant(t, s)
    expected = max(math.log(si / s[0]) / (ti - t[0]) for ti, si in zip(t[1:], s[1:]))
    assert c == pytest.approx(expected, rel=1e-12)
    assert np.all(s <= s[0] * np.exp(c * (t - t[0])) * (1 + 1e-12))
    # any smaller constant violates the envelope somewhere
    assert np.any(s > s[0] * np.exp(0.99 * c * (t - t[0])))
    # the plain anchored fit is smaller than the envelope constant
    assert least_squares_rate(t, s) < c


def test_fit_positive_prefix_warns():
    t = np.array([0.0, 0.5, 1.0, 1.5])
    s = np.array([1.0, math.e, 0.0, 5.0])
    with pytest.warns(RuntimeWarning, match="positive prefix"):
        assert fit_growth_constant(t, s) == pytest.approx(2.0)


def test_fit_rejects_mismatch():
    with pytest.raises(ValueError):
        fit_growth_constant([0.0, 1.0], [1.0])


# -- steady states -------------------------------------------------------------


def test_steady_pure_diffusion_reaches_eigenpair():
    grid = build_grid(DomainSpec(1, 1.0, 63))
    params = make_params(grid, 3.0, np.zeros(grid.size))
    g = build_initial(InitialSpec("gaussian-bump", center=(0.35,), width=0.1), grid)
    mu, v = first_eigenvector(grid)
    ss = run_to_steady(grid, g, params, SolverConfig(dt=1e-3, t_end=5.0), 1e-9, 5.0)
    assert ss.converged
    assert ss.lambda_inf == pytest.approx(mu, rel=1e-10)
    np.testing.assert_allclose(ss.u_inf, v, atol=1e-8)
    assert ss.residual <= 1e-7
    assert ss.times[0] == 0.0 and ss.lambdas[0] == pytest.approx(ss.lambdas[0])


def test_steady_residual_reported_matches(bump_problem):
    grid, params, g = bump_problem
    ss = run_to_steady(grid, g, params, SolverConfig(dt=1e-3, t_end=5.0), 1e-6, 3.0)
    assert ss.converged
    assert ss.residual == pytest.approx(steady_residual(grid, ss.u_inf, ss.lambda_inf, params))
    assert ss.residual <= 1e-4


def test_steady_not_converged_within_budget(bump_problem):
    grid, params, g = bump_problem
    ss = run_to_steady(grid, g, params, SolverConfig(dt=1e-2, t_end=1.0), 1e-14, 0.05)
    assert not ss.converged
    assert ss.t_reached == pytest.approx(0.05)


def test_steady_requires_renormalize(bump_problem):
    grid, params, g = bump_problem
    with pytest.raises(ValueError, match="renormalize"):
        run_to_steady(grid, g, params, SolverConfig(dt=1e-3, t_end=1.0, renormalize=False))


# -- stability -----------------------------------------------------------------


def test_zero_perturbation_gives_zero_divergence(bump_problem):
    grid, params, g = bump_problem
    rep = stability_experiment(grid, params, SolverConfig(dt=1e-2, t_end=1.0), g,
                               np.zeros(grid.size), t_end=0.5)
    assert np.all(rep.l2_div == 0) and np.all(rep.h1_div == 0)
    assert rep.c1_fit == 0.0 and rep.valid


def test_stability_envelope(bump_problem):
    grid, params, g = bump_problem
    delta = build_initial(InitialSpec("gaussian-bump", center=(0.3,), width=0.1), grid)
    rep = stability_experiment(grid, params, SolverConfig(dt=1e-2, t_end=1.0), g, delta,
                               t_end=1.0, eps=0.05)
    assert rep.valid and all(rep.bound_satisfied)
    assert rep.l2_div[-1] < rep.l2_div[0]  # both flows approach the same steady state
    assert rep.c1_fit >= rep.c1_ls


def test_stability_rejects_negative_perturbed_datum(bump_problem):
    grid, params, g = bump_problem
    with pytest.raises(ValueError, match="negative"):
        stability_experiment(grid, params, SolverConfig(dt=1e-2, t_end=1.0), g,
                             -10 * g, t_end=0.1)


def test_compare_trajectories_sampling(bump_problem):
    grid, params, g = bump_problem
    other = build_initial(InitialSpec("tent"), grid)
    rep = compare_trajectories(grid, params, SolverConfig(dt=0.01, t_end=1.0, output_every=5),
                               g, other, 0.21)
    np.testing.assert_allclose(rep.times, [0.0, 0.05, 0.1, 0.15, 0.2, 0.21])


# -- convergence ---------------------------------------------------------------


def test_restrict_samples_shared_nodes():
    fine = build_grid(DomainSpec(1, 1.0, 7))
    coarse = build_grid(DomainSpec(1, 1.0, 3))
    u = fine.nodes[:, 0] ** 2
    np.testing.assert_allclose(restrict(fine, coarse, u), coarse.nodes[:, 0] ** 2)
    with pytest.raises(ValueError, match="nest"):
        restrict(build_grid(DomainSpec(1, 1.0, 8)), coarse, np.zeros(8))


def test_restrict_2d():
    fine = build_grid(DomainSpec(2, (1.0, 2.0), (7, 11)))
    coarse = build_grid(DomainSpec(2, (1.0, 2.0), (3, 5)))
    x, y = fine.nodes.T
    cx, cy = coarse.nodes.T
    np.testing.assert_allclose(restrict(fine, coarse, x + 10 * y), cx + 10 * cy)


def _small_config(**solver):
    return RunConfig(
        domain=DomainSpec(1, 1.0, 31),
        p=3.0,
        solver=SolverConfig(**{"dt": 1e-3, "t_end": 0.05, **solver}),
        coefficient=CoefficientSpec("gaussian-bump", 1.0, (0.5,), 0.1),
        initial=InitialSpec("sine-mode", tilt=0.8),
    )


def test_space_convergence_second_order():
    cfg = _small_config(dt=1e-4)
    rep = convergence_study(cfg, space_levels=(15, 31, 63), t_compare=0.02)["space"]
    assert rep.errors[-1] == 0.0
    assert rep.observed_orders[0] == pytest.approx(2.0, abs=0.2)


def test_time_convergence_first_order():
    cfg = _small_config()
    rep = convergence_study(cfg, time_levels=(4e-3, 2e-3, 1e-3), t_compare=0.08)["time"]
    assert rep.observed_orders[0] == pytest.approx(1.0, abs=0.15)
    assert list(rep.differences) == sorted(rep.differences, reverse=True)


def test_convergence_level_validation():
    cfg = _small_config()
    with pytest.raises(ValueError, match="3 levels"):
        convergence_study(cfg, space_levels=(15, 31))
    with pytest.raises(ValueError, match="nest"):
        convergence_study(cfg, space_levels=(16, 32, 64), t_compare=0.002)
    with pytest.raises(ValueError, match="nest"):
        convergence_study(cfg, time_levels=(3e-3, 2e-3, 1e-3), t_compare=0.006)
    with pytest.raises(ValueError, match="multiple"):
        convergence_study(cfg, time_levels=(4e-3, 2e-3, 1e-3), t_compare=0.0105)


def test_identical_levels_give_nan_order():
    cfg = _small_config()
    rep = convergence_study(cfg, time_levels=(1e-3, 1e-3, 1e-3), t_compare=0.003)["time"]
    assert all(d == 0 for d in rep.differences)
    assert all(math.isnan(o) for o in rep.observed_orders)


# -- oracle --------------------------------------------------------------------


def test_oracle_agrees_with_imex_on_eigenvector():
    grid = build_grid(DomainSpec(1, 1.0, 31))
    params = make_params(grid, 3.0, np.zeros(grid.size))
    g = build_initial(InitialSpec("sine-mode"), grid)
    ref = oracle_solution(grid, g, params, 1e-5, 0.01)
    imex = evolve(grid, g, params, SolverConfig(dt=1e-3, t_end=0.01, renormalize=False)).u
    assert np.abs(ref - imex).max() <= 1e-10
    np.testing.assert_allclose(ref, g, atol=1e-10)
