"""Scikit-learn style regressor wrapping the samplers."""

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import MeasurementPolicy
from .energy import GaussianLikelihood, ParamPrior
from .evaluate import predictive_ensemble
from .gp import GPPrior, Kernel, kernel_matrix, pretrain
from .mlp import MLPArchitecture
from .samplers import DYNAMICS, ModelBundle, SamplerConfig, StepSchedule, run_chain

# Langevin updates move w by O(sqrt(eps)) per step, Hamiltonian ones by
# O(eps), so the stable step sizes differ by orders of magnitude.
DEFAULT_STEP_SIZE = {"sgld": 1e-4, "fsgld": 1e-4, "sghmc": 1e-3, "fsghmc": 1e-3}


def build_prior(X, y, kernel="rbf", lengthscale=0.2, variance=1.0, offset=1.0,
                mean="constant", noise_variance=0.25, epochs=100, lr=0.01, jitter=1e-2,
                return_trace=False):
    """Pre-train a GP prior on ``(X, y)`` and attach the sampling jitter.

    ``jitter`` is relative: the fitted prior carries
    ``jitter * mean(diag K(X, X))`` as its starting diagonal shift.
    """
    if kernel == "constant":
        gp, trace = GPPrior(Kernel("constant", variance=variance), mean_kind="zero"), np.array([])
    else:
        init = GPPrior(
            Kernel(kernel, lengthscale=lengthscale, variance=variance,
                   offset=offset if kernel == "linear" else 0.0),
            mean_kind=mean, noise_variance=noise_variance,
        )
        gp, trace = pretrain(init, X, y, epochs=epochs, lr=lr, return_trace=True)
    scale = float(np.mean(np.diag(kernel_matrix(gp.kernel, X))))
    gp = replace(gp, jitter=jitter * scale)
    return (gp, trace) if return_trace else gp


class FunctionalBNNRegressor(RegressorMixin, BaseEstimator):
    """Bayesian MLP regressor sampled with (functional) SG-MCMC.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
    activation : {"tanh", "relu", "identity"}
    dynamics : {"sgld", "sghmc", "fsgld", "fsghmc"}
    kernel : {"rbf", "matern52", "linear", "constant"}
        GP prior kernel for the functional samplers; ``"constant"`` skips
        pre-training and uses ``k = 1`` with zero mean.
    lengthscale, kernel_variance, kernel_offset, prior_noise_variance : float
        Starting values for marginal-likelihood pre-training.
    pretrain_epochs, pretrain_lr : int, float
    prior_jitter : float
        Diagonal shift of the sampling prior, relative to the mean kernel
        diagonal.
    gp_prior : GPPrior, optional
        Use this prior as is instead of pre-training.
    noise_std : float
        Gaussian likelihood noise.
    weight_prior_variance : float
        Isotropic weight prior of the parameter-space samplers.
    step_size : float, optional
        Initial step size; ``None`` picks a per-dynamics default.
    step_decay, decay_period : float, int
    burn_in, num_samples, thin, batch_size, leapfrog_steps : int
    friction, mass, init_scale : float
    m_train : int, optional
        Measurement points drawn from the training inputs; ``None`` uses all
        of them up to 1000.
    m_inducing : int
        Extra measurement points drawn uniformly from ``box``.
    box : (float, float)
    random_state : int

    Attributes
    ----------
    samples_ : ndarray, shape (num_samples, n_params)
    sample_set_ : SampleSet
    gp_prior_ : GPPrior or None
    model_ : MLPArchitecture
    """

    def __init__(self, hidden_layer_sizes=(100, 100), activation="tanh", dynamics="fsgld",
                 kernel="rbf", lengthscale=0.2, kernel_variance=1.0, kernel_offset=1.0,
                 prior_noise_variance=0.25, pretrain_epochs=100, pretrain_lr=0.01,
                 prior_jitter=1e-2, gp_prior=None, noise_std=0.5, weight_prior_variance=1.0,
                 step_size=None, step_decay=0.9, decay_period=5000, burn_in=2000,
                 num_samples=80, thin=100, batch_size=32, friction=0.1, mass=1.0,
                 leapfrog_steps=5, init_scale=1.0, m_train=None, m_inducing=0,
                 box=(-1.0, 1.0), random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.dynamics = dynamics
        self.kernel = kernel
        self.lengthscale = lengthscale
        self.kernel_variance = kernel_variance
        self.kernel_offset = kernel_offset
        self.prior_noise_variance = prior_noise_variance
        self.pretrain_epochs = pretrain_epochs
        self.pretrain_lr = pretrain_lr
        self.prior_jitter = prior_jitter
        self.gp_prior = gp_prior
        self.noise_std = noise_std
        self.weight_prior_variance = weight_prior_variance
        self.step_size = step_size
        self.step_decay = step_decay
        self.decay_period = decay_period
        self.burn_in = burn_in
        self.num_samples = num_samples
        self.thin = thin
        self.batch_size = batch_size
        self.friction = friction
        self.mass = mass
        self.leapfrog_steps = leapfrog_steps
        self.init_scale = init_scale
        self.m_train = m_train
        self.m_inducing = m_inducing
        self.box = box
        self.random_state = random_state

    def _sampler_config(self):
        eps = self.step_size if self.step_size is not None else DEFAULT_STEP_SIZE[self.dynamics]
        return SamplerConfig(
            burn_in=self.burn_in, num_samples=self.num_samples, thin=self.thin,
            batch_size=self.batch_size, friction=self.friction, mass=self.mass,
            leapfrog_steps=self.leapfrog_steps, seed=self.random_state,
            schedule=StepSchedule(eps, self.step_decay, self.decay_period),
            init_scale=self.init_scale,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.dynamics not in DYNAMICS:
            raise ValueError(f"dynamics must be one of {DYNAMICS}, got {self.dynamics!r}")
        n, p = X.shape
        self.n_features_in_ = p
        self.model_ = MLPArchitecture((p,) + tuple(self.hidden_layer_sizes) + (1,), self.activation)
        self.gp_prior_, self.pretrain_trace_ = None, None
        policy = None
        if self.dynamics.startswith("f"):
            if self.gp_prior is not None:
                self.gp_prior_ = self.gp_prior
            else:
                self.gp_prior_, self.pretrain_trace_ = build_prior(
                    X, y, kernel=self.kernel, lengthscale=self.lengthscale,
                    variance=self.kernel_variance, offset=self.kernel_offset,
                    noise_variance=self.prior_noise_variance, epochs=self.pretrain_epochs,
                    lr=self.pretrain_lr, jitter=self.prior_jitter, return_trace=True,
                )
            m_train = min(n, 1000) if self.m_train is None else self.m_train
            policy = MeasurementPolicy(m_train, self.m_inducing, *self.box)
        bundle = ModelBundle(
            self.model_, X, y, GaussianLikelihood(self.noise_std),
            ParamPrior(self.weight_prior_variance), gp=self.gp_prior_, policy=policy,
        )
        self.sample_set_ = run_chain(self.dynamics, bundle, self._sampler_config())
        self.samples_ = self.sample_set_.samples
        return self

    def predictive(self, X):
        """:class:`~funcmcmc.evaluate.PredictiveSummary` at ``X``."""
        check_is_fitted(self, "samples_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return predictive_ensemble(self.model_, self.samples_, X, GaussianLikelihood(self.noise_std))

    def predict(self, X, return_std=False):
        """Ensemble mean; with ``return_std`` also the total predictive std."""
        s = self.predictive(X)
        return (s.mean, s.std_total) if return_std else s.mean
