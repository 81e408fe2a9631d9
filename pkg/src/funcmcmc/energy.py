"""Stochastic potential-energy gradients for parameter- and function-space priors.

Both drifts return ``-grad_w U~(w)``: the minibatch likelihood term is scaled
by ``N / n``; the prior term is either an isotropic Gaussian on the weights
or the GP log-density at the measurement points, pulled back to the weights
by a vector-Jacobian product.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import DimensionMismatch
from .gp import prior_grad_and_log_density, prior_log_density

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianLikelihood:
    """Homoscedastic Gaussian observation model ``y ~ N(f, noise_std^2)``."""

    noise_std: float = 0.1

    def __post_init__(self):
        if not (self.noise_std > 0 and np.isfinite(self.noise_std)):
            raise ValueError("noise_std must be positive and finite")

    @property
    def variance(self):
        return self.noise_std**2

    def log_density(self, f, y):
        """Summed ``log N(y | f, sigma^2)``."""
        f, y = _match(f, y)
        r = y - f
        return float(-0.5 * np.sum(r * r) / self.variance - r.size * (0.5 * _LOG_2PI + math.log(self.noise_std)))


@dataclass(frozen=True)
class ParamPrior:
    """Isotropic Gaussian ``N(0, variance * I)`` over the flat weight vector."""

    variance: float = 1.0

    def __post_init__(self):
        if not (self.variance > 0 and np.isfinite(self.variance)):
            raise ValueError("prior variance must be positive and finite")

    def log_density(self, w):
        w = np.asarray(w, dtype=np.float64)
        return float(-0.5 * w @ w / self.variance - 0.5 * w.size * (_LOG_2PI + math.log(self.variance)))

    def grad(self, w):
        return -np.asarray(w, dtype=np.float64) / self.variance


def _match(f, y):
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1 and f.ndim == 2 and f.shape[1] == 1:
        y = y[:, None]
    if f.shape != y.shape:
        raise DimensionMismatch(f"outputs {f.shape} and targets {y.shape} differ in shape")
    return f, y


def grad_loglik_wrt_f(lik, f, y):
    """``(y - f) / sigma^2``, elementwise."""
    f, y = _match(f, y)
    return (y - f) / lik.variance


def _scale(N, n):
    if n < 1:
        raise ValueError("minibatch must contain at least one point")
    if N < n:
        raise ValueError(f"full data size N={N} is smaller than minibatch size n={n}")
    return N / n


def functional_drift(model, w, X_b, y_b, N, X_M, gp, lik, cache=None, return_log_post=False):
    """Drift of the functional Langevin update, ``-grad_w U~(f)``.

    The likelihood gradient at the minibatch points and the GP-prior gradient
    at the measurement points are stacked as one cotangent and pulled back
    through a single forward/backward sweep over ``[X_b; X_M]``; by batch
    additivity this equals the sum of two separate VJPs.

    With ``return_log_post`` the stochastic log-posterior surrogate
    ``(N/n) log p(y_b | f) + log P0(f_M)`` is also returned.
    """
    X_b = np.asarray(X_b, dtype=np.float64)
    X_M = np.asarray(X_M, dtype=np.float64)
    if X_b.ndim == 1:
        X_b = X_b[:, None]
    if X_M.ndim == 1:
        X_M = X_M[:, None]
    n = X_b.shape[0]
    scale = _scale(N, n)
    stats = {}

    def cotangent(out):
        f_b, f_M = out[:n], out[n:]
        g_lik = scale * grad_loglik_wrt_f(lik, f_b, y_b)
        g_prior, log_p0 = prior_grad_and_log_density(gp, X_M, f_M, cache=cache)
        if return_log_post:
            stats["log_post"] = scale * lik.log_density(f_b, y_b) + log_p0
        return np.concatenate([g_lik, g_prior], axis=0)

    _, drift = model.forward_and_vjp(w, np.concatenate([X_b, X_M], axis=0), cotangent)
    if return_log_post:
        return drift, stats["log_post"]
    return drift


def param_drift(model, w, X_b, y_b, N, param_prior, lik, return_log_post=False):
    """Drift of parameter-space SGLD/SGHMC, ``-grad_w U~(w)``."""
    X_b = np.asarray(X_b, dtype=np.float64)
    if X_b.ndim == 1:
        X_b = X_b[:, None]
    scale = _scale(N, X_b.shape[0])
    stats = {}

    def cotangent(out):
        if return_log_post:
            stats["log_lik"] = scale * lik.log_density(out, y_b)
        return scale * grad_loglik_wrt_f(lik, out, y_b)

    _, g = model.forward_and_vjp(w, X_b, cotangent)
    drift = g + param_prior.grad(w)
    if return_log_post:
        return drift, stats["log_lik"] + param_prior.log_density(w)
    return drift


def functional_energy(model, w, X_b, y_b, N, X_M, gp, lik):
    """Scalar ``U~(w) = -(N/n) log p(y_b | f) - log P0(f_M)`` (for checks)."""
    X_b = np.asarray(X_b, dtype=np.float64)
    if X_b.ndim == 1:
        X_b = X_b[:, None]
    scale = _scale(N, X_b.shape[0])
    return -scale * lik.log_density(model.forward(w, X_b), y_b) - prior_log_density(
        gp, X_M, model.forward(w, X_M)
    )


def param_energy(model, w, X_b, y_b, N, param_prior, lik):
    """Scalar ``U~(w) = -(N/n) log p(y_b | w) - log p0(w)``."""
    X_b = np.asarray(X_b, dtype=np.float64)
    if X_b.ndim == 1:
        X_b = X_b[:, None]
    scale = _scale(N, X_b.shape[0])
    return -scale * lik.log_density(model.forward(w, X_b), y_b) - param_prior.log_density(w)
