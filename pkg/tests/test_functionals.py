import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nonlocal_logistic.fields import CoefficientSpec, build_coefficient, make_params
from nonlocal_logistic.functionals import (
    DiagnosticsRecord,
    EnergyIdentityTracker,
    energy_identity_residual,
    lambda_of,
    lambda_tilde,
    local_energy,
    lyapunov,
    mass,
    pos,
    steady_residual,
)
from nonlocal_logistic.grid import DomainSpec, build_grid, discrete_eigenvalue_1d


def _sine_problem(n=255, a=1.0, p=3.0):
    grid = build_grid(DomainSpec(1, 1.0, n))
    x = grid.nodes[:, 0]
    params = make_params(grid, p, np.full(grid.size, a))
    return grid, params, np.sqrt(2) * np.sin(np.pi * x)


def test_pos():
    np.testing.assert_array_equal(pos(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])


def test_lambda_zero_field(grid1d):
    params = make_params(grid1d, 3.0, np.ones(grid1d.size))
    assert lambda_of(grid1d, np.zeros(grid1d.size), params) == 0.0


def test_lambda_sine_example():
    grid, params, u = _sine_problem()
    h = grid.h[0]
    assert lambda_of(grid, u, params) == pytest.approx(np.pi**2 + 0.5, abs=20 * h**2)
    mu = discrete_eigenvalue_1d(grid.spec.n[0])
    # sum of sin^4 over the nodes is exactly 3/8 (n+1), so the discrete value is exact
    assert lambda_of(grid, u, params) == pytest.approx(mu + 0.5, rel=1e-13)


def test_lambda_pure_diffusion():
    grid, params, u = _sine_problem(a=0.0)
    assert lambda_of(grid, u, params) == pytest.approx(discrete_eigenvalue_1d(255), rel=1e-13)


def test_lyapunov_sine_example():
    grid, params, u = _sine_problem()
    mu = discrete_eigenvalue_1d(255)
    assert lyapunov(grid, u, params) == pytest.approx(mu / 2 - 1 / 8, rel=1e-13)
    assert lyapunov(grid, u, params) == pytest.approx(np.pi**2 / 2 - 1 / 8, abs=1e-3)


def test_lambda_tilde_dominates(bump_problem):
    grid, params, g = bump_problem
    assert lambda_of(grid, g, params) <= lambda_tilde(grid, g, params)


def test_nonlocal_functionals_reject_p_le_one(grid1d):
    params = make_params(grid1d, 0.5, np.ones(grid1d.size), mode="local")
    u = np.ones(grid1d.size)
    for fn in (lambda_of, lambda_tilde, lyapunov):
        with pytest.raises(ValueError, match="p>1"):
            fn(grid1d, u, params)
    assert np.isfinite(local_energy(grid1d, u, params))


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, 20, elements=st.floats(0, 3)),
    arrays(np.float64, 20, elements=st.floats(0, 2)),
    st.floats(1.1, 5.0),
)
def test_lambda_lyapunov_algebraic_identity(u, a, p):
    grid = build_grid(DomainSpec(1, 1.0, 20))
    params = make_params(grid, p, a)
    lam = lambda_of(grid, u, params)
    F = lyapunov(grid, u, params)
    rest = (p - 1) / (p + 1) * float(np.sum(grid.weights * a * u ** (p + 1)))
    assert lam == pytest.approx(2 * F + rest, rel=1e-11, abs=1e-11)


def _brute_steady_residual(grid, u, lam, a, p):
    h = grid.h[0]
    n = grid.size
    total = 0.0
    for i in range(n):
        left = u[i - 1] if i > 0 else 0.0
        right = u[i + 1] if i < n - 1 else 0.0
        r = (left - 2 * u[i] + right) / h**2 + lam * u[i] + a[i] * (u[i] - max(u[i], 0) ** p)
        total += h * r * r
    return np.sqrt(total)


def test_steady_residual_against_node_loop(bump_problem):
    grid, params, g = bump_problem
    got = steady_residual(grid, g, 3.7, params)
    assert got == pytest.approx(_brute_steady_residual(grid, g, 3.7, params.a, params.p), rel=1e-12)


def test_steady_residual_of_eigenpair():
    grid, params, u = _sine_problem(a=0.0)
    mu = discrete_eigenvalue_1d(255)
    assert steady_residual(grid, u, mu, params) <= 1e-9


def test_energy_identity_constant_history(bump_problem):
    grid, params, g = bump_problem
    res = energy_identity_residual(grid, [0.0, 0.1, 0.2], [g, g, g], params)
    np.testing.assert_allclose(res, 0.0, atol=1e-12)


def test_energy_identity_single_entry(bump_problem):
    grid, params, g = bump_problem
    assert abs(energy_identity_residual(grid, [0.0], [g], params)[0]) <= 1e-12


def test_energy_identity_rejects_bad_history(bump_problem):
    grid, params, g = bump_problem
    with pytest.raises(ValueError):
        energy_identity_residual(grid, [0.0, 1.0], [g], params)


def test_tracker_matches_history_form(bump_problem, rng):
    grid, params, g = bump_problem
    states = [g]
    for _ in range(4):
        states.append(np.abs(states[-1] + 0.01 * rng.standard_normal(grid.size)))
    times = [0.0, 0.1, 0.25, 0.3, 0.5]
    hist = energy_identity_residual(grid, times, states, params)
    tracker = EnergyIdentityTracker(grid, g, params)
    for i in range(1, 5):
        tracker.update(states[i - 1], states[i], times[i] - times[i - 1])
        assert tracker.residual(states[i]) == pytest.approx(hist[i], rel=1e-10, abs=1e-10)


def test_local_energy_identity_mode(grid1d):
    params = make_params(grid1d, 0.5, np.ones(grid1d.size), mode="local", r=1.0, K=1.0)
    u = np.sin(np.pi * grid1d.nodes[:, 0])
    res = energy_identity_residual(grid1d, [0.0, 1.0], [u, u], params)
    np.testing.assert_allclose(res, 0.0, atol=1e-14)


def test_mass_and_record_header(grid1d):
    assert mass(grid1d, np.zeros(grid1d.size)) == 0.0
    rec = DiagnosticsRecord(0.0, 1.0, 1.0, 0.5, 2.0, 0.0, 0.0, 0.0)
    assert len(rec.as_tuple()) == len(DiagnosticsRecord.HEADER.split(","))
    assert DiagnosticsRecord.HEADER.startswith("t,lambda,mass")


def test_lambda_with_gaussian_coefficient_refines():
    vals = []
    for n in (63, 127, 255):
        grid = build_grid(DomainSpec(1, 1.0, n))
        a = build_coefficient(CoefficientSpec("gaussian-bump", 1.0, (0.5,), 0.1), grid)
        params = make_params(grid, 3.0, a)
        u = np.sqrt(2) * np.sin(np.pi * grid.nodes[:, 0])
        vals.append(lambda_of(grid, u, params))
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    assert np.log2(abs(d1 / d2)) == pytest.approx(2.0, abs=0.15)
