import numpy as np
import pytest

from funcmcmc.exceptions import ConfigError
from funcmcmc.verify import (
    GRID, VerifyConfig, batch_means_se, conjugate_problem, verify_tractable,
)


def test_conjugate_posterior_matches_weight_space():
    # independent oracle: Bayesian linear regression on (slope, intercept)
    t, y, _, mean, cov = conjugate_problem(10, 0.5, seed=0)
    Phi = np.column_stack([t[:, 0], np.ones(10)])
    A = Phi.T @ Phi / 0.25 + np.eye(2)
    S = np.linalg.inv(A)
    mu = S @ Phi.T @ y[:, 0] / 0.25
    G = np.column_stack([GRID[:, 0], np.ones(GRID.shape[0])])
    np.testing.assert_allclose(mean, G @ mu, rtol=1e-10)
    np.testing.assert_allclose(cov, G @ S @ G.T, rtol=1e-10, atol=1e-12)


def test_zero_data_posterior_is_prior():
    _, _, _, mean, cov = conjugate_problem(0, 0.5, seed=0)
    assert np.all(mean == 0)
    np.testing.assert_allclose(np.diag(cov), GRID[:, 0] ** 2 + 1)


def test_batch_means_se_iid():
    rng = np.random.default_rng(0)
    trace = rng.standard_normal((1, 40_000, 2))
    se = batch_means_se(trace)
    np.testing.assert_allclose(se, 1 / np.sqrt(40_000), rtol=0.4)
    many = rng.standard_normal((20, 1000, 1))
    assert batch_means_se(many)[0] == pytest.approx(1 / np.sqrt(20_000), rel=0.5)


def test_short_gaussian_run_passes():
    cfg = VerifyConfig(steps=20_000, burn_in=2000, step_size=5e-3, chains=200, mean_tol=0.05,
                       var_tol=0.1)
    rep = verify_tractable("gaussian2d", "sgld", cfg)
    assert rep.passed, rep.to_json()
    assert rep.second_moment == "covariance"
    assert len(rep.checks) == 2 + 4


def test_zero_tolerance_fails():
    cfg = VerifyConfig(steps=2000, burn_in=100, step_size=5e-3, chains=20, mean_tol=0.0,
                       var_tol=0.0)
    assert not verify_tractable("gaussian2d", "sghmc", cfg).passed


def test_conjugate_zero_data_prior_only():
    cfg = VerifyConfig(steps=20_000, burn_in=1000, step_size=2e-3, chains=8, n_data=0,
                       var_tol=0.15)
    rep = verify_tractable("conjugate_linear", "fsgld", cfg)
    assert rep.passed, rep.to_json()


def test_target_dynamics_pairing():
    with pytest.raises(ConfigError):
        verify_tractable("gaussian2d", "fsgld")
    with pytest.raises(ConfigError):
        verify_tractable("conjugate_linear", "sgld")
    with pytest.raises(ConfigError):
        verify_tractable("banana", "sgld")
    with pytest.raises(ConfigError):
        VerifyConfig(steps=0)
