import numpy as np
import pytest

from funcmcmc.data import MeasurementPolicy
from funcmcmc.energy import GaussianLikelihood, ParamPrior
from funcmcmc.exceptions import NonFiniteState
from funcmcmc.gp import GPPrior, Kernel
from funcmcmc.linalg import make_rng
from funcmcmc.mlp import MLPArchitecture
from funcmcmc.samplers import (
    ModelBundle, SamplerConfig, StepSchedule, resample_momentum, run_chain, sghmc_step, sgld_step,
    step_size,
)


def test_step_schedule():
    s = StepSchedule(1e-3, 0.5, 10)
    assert step_size(s, 0) == 1e-3
    assert step_size(s, 9) == 1e-3
    assert step_size(s, 10) == pytest.approx(5e-4)
    assert s(25) == pytest.approx(2.5e-4)
    with pytest.raises(ValueError):
        step_size(s, -1)
    with pytest.raises(ValueError):
        StepSchedule(0.0)


def test_sgld_noiseless_is_gradient_step():
    w = np.array([1.0, -2.0])
    out = sgld_step(w, np.array([0.5, 1.0]), 0.1, make_rng(0), noise=False)
    np.testing.assert_allclose(out, [1.05, -1.9])


def test_sgld_noise_uses_sqrt_2eps():
    rng_a, rng_b = make_rng(3), make_rng(3)
    w = np.zeros(4)
    out = sgld_step(w, np.zeros(4), 0.02, rng_a)
    np.testing.assert_allclose(out, np.sqrt(0.04) * rng_b.standard_normal(4))


def test_sghmc_noiseless_update():
    w, z = np.array([1.0]), np.array([2.0])
    w2, z2 = sghmc_step(w, z, np.array([-1.0]), 0.1, 0.5, 2.0, make_rng(0), noise=False)
    # w' = w + eps z/M ; z' = z + eps*drift - eps*C*z/M
    np.testing.assert_allclose(w2, [1.1])
    np.testing.assert_allclose(z2, [2.0 - 0.1 - 0.05])


def test_sghmc_zero_friction_conserves_energy_approximately():
    # harmonic oscillator U = w^2/2: leapfrog-like Euler keeps energy bounded at small eps
    w, z = np.array([1.0]), np.array([0.0])
    for _ in range(1000):
        w, z = sghmc_step(w, z, -w, 1e-3, 0.0, 1.0, make_rng(0), noise=False)
    assert 0.5 * (w[0] ** 2 + z[0] ** 2) == pytest.approx(0.5, rel=1e-2)


def test_momentum_scale():
    z = resample_momentum(4.0, 100_000, make_rng(1))
    assert z.var() == pytest.approx(4.0, rel=0.02)


def test_nonfinite_state_raises():
    with pytest.raises(NonFiniteState):
        sgld_step(np.array([np.inf]), np.zeros(1), 0.1, make_rng(0))


def _bundle(functional):
    rng = make_rng(0)
    X = rng.uniform(-1, 1, (30, 1))
    y = np.sin(3 * X) + 0.1 * rng.standard_normal((30, 1))
    return ModelBundle(
        MLPArchitecture((1, 8, 1)), X, y, GaussianLikelihood(0.1), ParamPrior(1.0),
        gp=GPPrior(Kernel("rbf", 0.5), jitter=1e-3) if functional else None,
        policy=MeasurementPolicy(10, 5) if functional else None,
    )


@pytest.mark.parametrize("dynamics", ["sgld", "sghmc", "fsgld", "fsghmc"])
def test_run_chain_counts_and_determinism(dynamics):
    cfg = SamplerConfig(burn_in=20, num_samples=4, thin=5, batch_size=10, leapfrog_steps=3,
                        schedule=StepSchedule(1e-4, 0.9, 100), seed=3)
    a = run_chain(dynamics, _bundle(dynamics.startswith("f")), cfg)
    b = run_chain(dynamics, _bundle(dynamics.startswith("f")), cfg)
    assert a.samples.shape == (4, MLPArchitecture((1, 8, 1)).n_params)
    assert a.log_post.shape == (40,)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.log_post, b.log_post)


def test_run_chain_reports_divergence():
    cfg = SamplerConfig(burn_in=200, num_samples=1, thin=1, batch_size=10,
                        schedule=StepSchedule(1e3, 1.0, 100))
    with pytest.raises(NonFiniteState) as err:
        run_chain("sgld", _bundle(False), cfg)
    assert err.value.iteration is not None
    assert np.all(np.isfinite(err.value.last_state))


def test_functional_dynamics_need_prior():
    with pytest.raises(ValueError):
        run_chain("fsgld", _bundle(False), SamplerConfig(burn_in=1, num_samples=1, thin=1))


def test_unknown_dynamics():
    with pytest.raises(ValueError):
        run_chain("hmc", _bundle(False), SamplerConfig())


def test_sgld_samples_gaussian_posterior():
    # one-parameter conjugate model: y_i ~ N(w, 1), w ~ N(0, 1)
    from funcmcmc.mlp import ConstantModel

    rng = make_rng(4)
    y = 0.7 + rng.standard_normal((20, 1))
    bundle = ModelBundle(ConstantModel(), np.zeros((20, 1)), y, GaussianLikelihood(1.0),
                         ParamPrior(1.0))
    cfg = SamplerConfig(burn_in=1000, num_samples=4000, thin=10, batch_size=20,
                        schedule=StepSchedule(5e-3, 1.0, 10**9), seed=1)
    s = run_chain("sgld", bundle, cfg).samples[:, 0]
    post_var = 1.0 / 21.0
    assert s.mean() == pytest.approx(y.sum() * post_var, abs=0.03)
    assert s.var() == pytest.approx(post_var, rel=0.15)
