import numpy as np
import pytest

from funcmcmc.energy import (
    GaussianLikelihood, ParamPrior, functional_drift, functional_energy, grad_loglik_wrt_f,
    param_drift, param_energy,
)
from funcmcmc.exceptions import DimensionMismatch
from funcmcmc.gp import GPPrior, Kernel, prior_log_density
from funcmcmc.linalg import make_rng
from funcmcmc.mlp import MLPArchitecture


def _fd(fun, w, h=1e-6):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (fun(w + e) - fun(w - e)) / (2 * h)
    return g


@pytest.fixture
def problem():
    rng = make_rng(0)
    model = MLPArchitecture((2, 5, 1))
    return dict(
        model=model,
        w=rng.normal(0, 0.7, model.n_params),
        X=rng.uniform(-1, 1, (6, 2)),
        y=rng.standard_normal((6, 1)),
        X_M=rng.uniform(-1, 1, (4, 2)),
        gp=GPPrior(Kernel("rbf", 0.7), mean_kind="constant", mean_constant=0.2, jitter=1e-4),
        lik=GaussianLikelihood(0.4),
    )


def test_gaussian_log_density_closed_form():
    lik = GaussianLikelihood(0.5)
    f, y = np.array([0.0, 1.0]), np.array([0.5, 0.0])
    expected = -0.5 * (0.25 + 1.0) / 0.25 - 2 * (0.5 * np.log(2 * np.pi) + np.log(0.5))
    assert lik.log_density(f, y) == pytest.approx(expected)


def test_grad_loglik_examples():
    lik = GaussianLikelihood(1.0)
    np.testing.assert_allclose(grad_loglik_wrt_f(lik, np.array([0.0, 2.0]), np.array([1.0, 2.0])),
                               [1.0, 0.0])


def test_grad_loglik_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        grad_loglik_wrt_f(GaussianLikelihood(), np.zeros(3), np.zeros(4))


def test_functional_drift_matches_energy(problem):
    p = problem
    d = functional_drift(p["model"], p["w"], p["X"], p["y"], 24, p["X_M"], p["gp"], p["lik"])
    fd = -_fd(lambda v: functional_energy(p["model"], v, p["X"], p["y"], 24, p["X_M"], p["gp"],
                                          p["lik"]), p["w"])
    assert np.linalg.norm(d - fd) <= 1e-6 * np.linalg.norm(fd)


def test_functional_drift_is_sum_of_two_vjps(problem):
    p = problem
    m, w = p["model"], p["w"]
    lik_part = m.vjp(w, p["X"], 4.0 * grad_loglik_wrt_f(p["lik"], m.forward(w, p["X"]), p["y"]))
    f_M = m.forward(w, p["X_M"])
    prior_part = -_fd(lambda v: -prior_log_density(p["gp"], p["X_M"], m.forward(v, p["X_M"])), w)
    d = functional_drift(m, w, p["X"], p["y"], 24, p["X_M"], p["gp"], p["lik"])
    assert np.linalg.norm(d - lik_part - prior_part) <= 1e-6 * np.linalg.norm(d)
    assert f_M.shape == (4, 1)


def test_log_post_surrogate(problem):
    p = problem
    _, lp = functional_drift(p["model"], p["w"], p["X"], p["y"], 24, p["X_M"], p["gp"], p["lik"],
                             return_log_post=True)
    assert lp == pytest.approx(-functional_energy(p["model"], p["w"], p["X"], p["y"], 24,
                                                  p["X_M"], p["gp"], p["lik"]))


def test_param_drift_matches_energy(problem):
    p = problem
    prior = ParamPrior(0.5)
    d, lp = param_drift(p["model"], p["w"], p["X"], p["y"], 12, prior, p["lik"],
                        return_log_post=True)
    fd = -_fd(lambda v: param_energy(p["model"], v, p["X"], p["y"], 12, prior, p["lik"]), p["w"])
    assert np.linalg.norm(d - fd) <= 1e-6 * np.linalg.norm(fd)
    assert lp == pytest.approx(-param_energy(p["model"], p["w"], p["X"], p["y"], 12, prior, p["lik"]))


def test_minibatch_scaling_is_unbiased(problem):
    # averaging the scaled drift over all disjoint minibatches gives the full-batch drift
    p = problem
    full = param_drift(p["model"], p["w"], p["X"], p["y"], 6, ParamPrior(), p["lik"])
    parts = [param_drift(p["model"], p["w"], p["X"][i:i + 2], p["y"][i:i + 2], 6, ParamPrior(),
                         p["lik"]) for i in (0, 2, 4)]
    np.testing.assert_allclose(np.mean(parts, axis=0), full, rtol=1e-10)


def test_batch_larger_than_dataset(problem):
    p = problem
    with pytest.raises(ValueError):
        param_drift(p["model"], p["w"], p["X"], p["y"], 3, ParamPrior(), p["lik"])


def test_invalid_noise():
    with pytest.raises(ValueError):
        GaussianLikelihood(0.0)
    with pytest.raises(ValueError):
        ParamPrior(-1.0)
