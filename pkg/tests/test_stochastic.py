import math

import numpy as np
import pytest
import scipy.linalg

from preq.checks import check_initial_independence, check_norm_conservation
from preq.dynamics import TimeGrid, closed_form_similarity
from preq.generators import DriftSchedule
from preq.operators import NotPositiveError, max_abs
from preq.stochastic import (
    SDESpec,
    covariance_bound,
    empirical_covariance_at,
    ou_covariance_ode,
    path_norms,
    simulate_brownian,
    simulate_linear_sde,
)
from randomops import I2, SZ, ginibre, hermitian, psd

Z2 = np.zeros((2, 2))


def test_zero_diffusion_paths_are_constant():
    ens = simulate_brownian(Z2, I2, TimeGrid(0, 1, 50), 200, seed=1, record_paths=True)
    assert max_abs(ens.paths - ens.paths[:, :1, :]) == 0
    assert ens.paths.shape == (200, 51, 2)


def test_brownian_from_origin():
    N = 20_000
    ens = simulate_brownian(I2, Z2, TimeGrid(0, 1, 100), N, seed=2)
    assert max_abs(empirical_covariance_at(ens, 0)) == 0
    assert max_abs(empirical_covariance_at(ens, 100) - I2) <= 5 / math.sqrt(N)


def test_brownian_linear_growth():
    N = 20_000
    grid = TimeGrid(0, 2, 200)
    ens = simulate_brownian(np.diag([1.0, 0.0]), I2, grid, N, seed=3)
    C = empirical_covariance_at(ens, grid.index_of(2.0))
    assert max_abs(C - np.diag([3.0, 1.0])) <= 5 * 3 / math.sqrt(N)
    C1 = empirical_covariance_at(ens, grid.index_of(1.0))
    assert max_abs(C1 - np.diag([2.0, 1.0])) <= 5 * 2 / math.sqrt(N)


def test_brownian_increments_have_variance_dt():
    grid = TimeGrid(0, 0.5, 5)
    ens = simulate_brownian(I2, Z2, grid, 40_000, seed=4, record_paths=True)
    inc = np.diff(ens.paths, axis=1)
    var = np.mean(np.abs(inc) ** 2)
    assert var == pytest.approx(grid.dt, rel=0.02)
    # circular symmetry of the increments
    assert abs(np.mean(inc ** 2)) <= 0.02 * grid.dt


def test_zero_drift_sde_is_brownian():
    grid = TimeGrid(0, 1, 100)
    S, B0 = psd(np.random.default_rng(0), 2), I2
    a = simulate_brownian(S, B0, grid, 5000, seed=5)
    b = simulate_linear_sde(SDESpec(Z2, S, B0), grid, 5000, seed=5)
    assert a.second_moments.tobytes() == b.second_moments.tobytes()


def test_noise_free_paths_follow_exponential(rng):
    A = ginibre(rng, 2)
    grid = TimeGrid(0, 1, 1000)
    ens = simulate_linear_sde(SDESpec(A, Z2, psd(rng, 2)), grid, 300, seed=6, record_paths=True)
    phi0, phi1 = ens.paths[:, 0], ens.paths[:, -1]
    exact = phi0 @ scipy.linalg.expm(A).T
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(phi1 - exact)) <= 5 * grid.dt * scale
    B_emp = empirical_covariance_at(ens, grid.steps)
    # with Sigma = 0 the EM covariance is the Euler propagation of the sampled initial moments
    F = np.linalg.matrix_power(np.eye(2) + grid.dt * A, grid.steps)
    B0_emp = empirical_covariance_at(ens, 0)
    assert max_abs(B_emp - F @ B0_emp @ F.conj().T) <= 1e-10
    B_closed = closed_form_similarity(A, B0_emp, 1.0)
    assert max_abs(B_emp - B_closed) <= 10 * grid.dt * max_abs(B_closed)


def test_unitary_drift_conserves_norms():
    grid = TimeGrid(0, 2, 2000)
    ens = simulate_linear_sde(SDESpec(-1j * SZ, Z2, I2), grid, 500, seed=7, record_paths=True)
    norms = path_norms(ens)
    drift = np.max(np.abs(norms / norms[:, :1] - 1))
    assert drift <= 2 * grid.dt  # Euler: |1 + i dt|^k - 1 ~ k dt^2 / 2
    ode = ou_covariance_ode(ens.spec, grid)
    assert check_norm_conservation(ens, ode).passed


def test_path_norms_require_recorded_paths():
    ens = simulate_brownian(I2, I2, TimeGrid(0, 1, 4), 10, seed=0)
    with pytest.raises(ValueError):
        path_norms(ens)


def test_index_out_of_range():
    ens = simulate_brownian(I2, I2, TimeGrid(0, 1, 4), 10, seed=0)
    with pytest.raises(IndexError):
        empirical_covariance_at(ens, 5)
    with pytest.raises(IndexError):
        empirical_covariance_at(ens, -1)


def test_sde_spec_validation():
    with pytest.raises(NotPositiveError):
        SDESpec(Z2, np.diag([1.0, -1.0]), I2)
    with pytest.raises(Exception):
        SDESpec(Z2, I2, np.eye(3))
    with pytest.raises(ValueError):
        simulate_brownian(I2, I2, TimeGrid(0, 1, 4), 0, seed=0)


def test_initial_condition_independent_of_noise():
    ens = simulate_brownian(I2, I2, TimeGrid(0, 1, 10), 50_000, seed=8)
    assert check_initial_independence(ens).passed


def test_worker_count_does_not_change_results(rng):
    spec = SDESpec(ginibre(rng, 2), psd(rng, 2), psd(rng, 2))
    grid = TimeGrid(0, 0.5, 100)
    a = simulate_linear_sde(spec, grid, 20_000, seed=9, workers=1, record_paths=True)
    b = simulate_linear_sde(spec, grid, 20_000, seed=9, workers=4, record_paths=True)
    assert a.second_moments.tobytes() == b.second_moments.tobytes()
    assert a.paths.tobytes() == b.paths.tobytes()
    # the streamed moments equal moments taken from the stored paths
    direct = np.einsum("ptk,ptl->tkl", a.paths, a.paths.conj()) / a.N
    assert max_abs(direct - a.second_moments) <= 1e-12


def test_ou_ode_examples(rng):
    grid = TimeGrid(0, 2, 20)
    S, B0 = psd(rng, 2), psd(rng, 2)
    ode = ou_covariance_ode(SDESpec(Z2, S, B0), grid)
    for k, t in enumerate(grid.times):
        assert max_abs(ode.values[k] - (B0 + S * t)) <= 1e-12
    A = ginibre(rng, 2)
    ode = ou_covariance_ode(SDESpec(A, Z2, B0), grid)
    assert max_abs(ode.final - closed_form_similarity(A, B0, 2.0)) <= 1e-12
    H = hermitian(rng, 2)
    Sd = np.diag([1.0, 0.0])
    ode = ou_covariance_ode(SDESpec(-1j * H, Sd, B0), grid)
    np.testing.assert_allclose(ode.traces(), np.trace(B0).real + grid.times, atol=1e-12)


def test_ou_with_switching_drift(rng):
    A1, A2 = -np.eye(2) + ginibre(rng, 2), -np.eye(2)
    spec = SDESpec(DriftSchedule(((0.5, A1), (np.inf, A2))), I2, I2)
    grid = TimeGrid(0, 1, 1000)
    N = 20_000
    ens = simulate_linear_sde(spec, grid, N, seed=10)
    ode = ou_covariance_ode(spec, grid)
    for t in (0.25, 0.5, 1.0):
        k = grid.index_of(t)
        assert max_abs(ens.second_moments[k] - ode.values[k]) <= covariance_bound(ode.values[k], N, grid.dt)


def test_ou_matches_ode_small():
    A = np.array([[-1.0, 0.3], [0.1, -0.5j]])
    spec = SDESpec(A, I2, I2)
    grid = TimeGrid.with_step(0, 1, 1e-3)
    N = 20_000
    ens = simulate_linear_sde(spec, grid, N, seed=11)
    ode = ou_covariance_ode(spec, grid)
    for t in (0.5, 1.0):
        k = grid.index_of(t)
        assert max_abs(ens.second_moments[k] - ode.values[k]) <= covariance_bound(ode.values[k], N, grid.dt)
