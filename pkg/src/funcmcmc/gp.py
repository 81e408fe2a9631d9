"""Gaussian-process functional priors evaluated on finite point sets.

A :class:`GPPrior` marginalised on measurement points ``X_M`` is the
multivariate Gaussian ``N(m(X_M), K(X_M, X_M))``. Its log-density gradient in
function values, ``-K^{-1}(f - m)``, is what the functional samplers push back
through the network. Multi-output functions get one independent copy of the
same GP per output column.
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from .exceptions import DimensionMismatch, NonFiniteLoss, NotPositiveDefinite
from .linalg import cholesky, solve_spd

logger = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
KERNEL_TYPES = ("rbf", "matern52", "linear", "constant")


def _as_2d(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _sqdist(X1, X2):
    d = (
        np.sum(X1 * X1, axis=1)[:, None]
        + np.sum(X2 * X2, axis=1)[None, :]
        - 2.0 * X1 @ X2.T
    )
    return np.maximum(d, 0.0)


@dataclass(frozen=True)
class Kernel:
    """Stationary or dot-product covariance function.

    ``kind`` is ``"rbf"``, ``"matern52"``, ``"linear"`` (``variance * (x.x' + offset)``)
    or ``"constant"`` (``variance`` everywhere). ``lengthscale`` only matters
    for the stationary kernels, ``offset`` only for the linear one.
    """

    kind: str = "rbf"
    lengthscale: float = 1.0
    variance: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNEL_TYPES:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNEL_TYPES}")
        if not (self.variance > 0 and np.isfinite(self.variance)):
            raise ValueError("kernel variance must be positive and finite")
        if self.kind in ("rbf", "matern52") and not (self.lengthscale > 0 and np.isfinite(self.lengthscale)):
            raise ValueError("lengthscale must be positive and finite")
        if self.kind == "linear" and self.offset < 0:
            raise ValueError("linear kernel offset must be non-negative")

    def __call__(self, X1, X2=None):
        return kernel_matrix(self, X1, X2)


def kernel_matrix(kernel, X1, X2=None):
    """Gram matrix with entries ``k(X1[i], X2[j])``."""
    X1 = _as_2d(X1)
    X2 = X1 if X2 is None else _as_2d(X2)
    if X1.shape[1] != X2.shape[1]:
        raise DimensionMismatch(
            f"input dimensions differ: {X1.shape[1]} vs {X2.shape[1]}"
        )
    if kernel.kind == "linear":
        K = kernel.variance * (X1 @ X2.T + kernel.offset)
    elif kernel.kind == "constant":
        K = np.full((X1.shape[0], X2.shape[0]), kernel.variance)
    else:
        r2 = _sqdist(X1, X2) / kernel.lengthscale**2
        if kernel.kind == "rbf":
            K = kernel.variance * np.exp(-0.5 * r2)
        else:
            s = np.sqrt(5.0 * r2)
            K = kernel.variance * (1.0 + s + s * s / 3.0) * np.exp(-s)
    if X2 is X1:
        K = 0.5 * (K + K.T)
    return K


def _kernel_grads(kernel, X):
    """Gram matrix and its derivatives w.r.t. the log-hyperparameters."""
    K = kernel_matrix(kernel, X)
    grads = {"log_variance": K}
    if kernel.kind == "linear":
        if kernel.offset > 0:
            grads["log_offset"] = np.full_like(K, kernel.variance * kernel.offset)
    elif kernel.kind != "constant":
        r2 = _sqdist(X, X) / kernel.lengthscale**2
        if kernel.kind == "rbf":
            grads["log_lengthscale"] = K * r2
        else:
            s = np.sqrt(5.0 * r2)
            grads["log_lengthscale"] = kernel.variance * (s * s / 3.0) * (1.0 + s) * np.exp(-s)
    return K, grads


@dataclass(frozen=True)
class GPPrior:
    """GP prior ``GP(m, k)`` with constant mean.

    ``mean_kind`` is ``"zero"`` or ``"constant"``; ``noise_variance`` is only
    used by :func:`pretrain` and never enters the functional prior itself.
    ``jitter`` is the starting diagonal shift handed to the factorisation.
    """

    kernel: Kernel = field(default_factory=Kernel)
    mean_kind: str = "zero"
    mean_constant: float = 0.0
    noise_variance: float = 0.1
    jitter: float = 0.0

    def __post_init__(self):
        if self.mean_kind not in ("zero", "constant"):
            raise ValueError("mean_kind must be 'zero' or 'constant'")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")

    def mean(self, X):
        n = _as_2d(X).shape[0]
        c = self.mean_constant if self.mean_kind == "constant" else 0.0
        return np.full(n, c)

    # key-value form used by run configs and artifact files
    def to_dict(self):
        return {
            "kernel.type": self.kernel.kind,
            "kernel.lengthscale": float(self.kernel.lengthscale),
            "kernel.variance": float(self.kernel.variance),
            "kernel.offset": float(self.kernel.offset),
            "mean.constant": float(self.mean_constant) if self.mean_kind == "constant" else None,
            "noise.variance": float(self.noise_variance),
            "jitter": float(self.jitter),
        }

    @classmethod
    def from_dict(cls, d):
        mean_constant = d.get("mean.constant")
        kernel = Kernel(
            kind=d.get("kernel.type", "rbf"),
            lengthscale=float(d.get("kernel.lengthscale", 1.0)),
            variance=float(d.get("kernel.variance", 1.0)),
            offset=float(d.get("kernel.offset", 0.0)),
        )
        return cls(
            kernel=kernel,
            mean_kind="zero" if mean_constant is None else "constant",
            mean_constant=0.0 if mean_constant is None else float(mean_constant),
            noise_variance=float(d.get("noise.variance", 0.1)),
            jitter=float(d.get("jitter", 0.0)),
        )


def fixed_unit_prior():
    """Zero mean, ``k(x, x') = 1``: the prior used when skipping pre-training."""
    return GPPrior(kernel=Kernel("constant", variance=1.0), mean_kind="zero")


class PriorFactorCache:
    """Reuse the Cholesky factor while the measurement set does not change.

    Samplers that keep ``X_M`` fixed (e.g. all training points) would otherwise
    refactor an identical Gram matrix every step.
    """

    def __init__(self):
        self._key = None
        self._value = None

    def factor(self, gp, X_M):
        X_M = np.ascontiguousarray(_as_2d(X_M))
        key = (gp, X_M.shape, X_M.tobytes())
        if key != self._key:
            K = kernel_matrix(gp.kernel, X_M)
            self._value = cholesky(K, gp.jitter)
            self._key = key
        return self._value


def _factor(gp, X_M, cache):
    if cache is not None:
        return cache.factor(gp, X_M)
    return cholesky(kernel_matrix(gp.kernel, X_M), gp.jitter)


def _centre(gp, X_M, f_M):
    X_M = _as_2d(X_M)
    f = np.asarray(f_M, dtype=np.float64)
    if f.shape[0] != X_M.shape[0]:
        raise DimensionMismatch(
            f"{f.shape[0]} function values for {X_M.shape[0]} measurement points"
        )
    m = gp.mean(X_M)
    return X_M, (f - m) if f.ndim == 1 else (f - m[:, None])


def prior_log_density(gp, X_M, f_M, cache=None):
    """``log N(f_M | m(X_M), K + jI)``, summed over output columns."""
    X_M, r = _centre(gp, X_M, f_M)
    L = _factor(gp, X_M, cache)
    R = r[:, None] if r.ndim == 1 else r
    alpha = solve_spd(L, R)
    M, c = R.shape
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * np.sum(R * alpha) - 0.5 * c * logdet - 0.5 * M * c * _LOG_2PI)


def prior_grad_and_log_density(gp, X_M, f_M, cache=None):
    """Gradient and log-density from one factorisation and one solve."""
    X_M, r = _centre(gp, X_M, f_M)
    L = _factor(gp, X_M, cache)
    alpha = solve_spd(L, r)
    R = r[:, None] if r.ndim == 1 else r
    M, c = R.shape
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    log_p = float(-0.5 * np.sum(r * alpha) - 0.5 * c * logdet - 0.5 * M * c * _LOG_2PI)
    return -alpha, log_p


def prior_grad(gp, X_M, f_M, cache=None):
    """Gradient ``-(K + jI)^{-1} (f_M - m(X_M))``, same shape as ``f_M``."""
    X_M, r = _centre(gp, X_M, f_M)
    L = _factor(gp, X_M, cache)
    return -solve_spd(L, r)


# --- marginal-likelihood pre-training ------------------------------------


def _unpack(gp, theta, names):
    vals = dict(zip(names, theta))
    k = gp.kernel
    kernel = replace(
        k,
        lengthscale=math.exp(vals["log_lengthscale"]) if "log_lengthscale" in vals else k.lengthscale,
        variance=math.exp(vals["log_variance"]),
        offset=math.exp(vals["log_offset"]) if "log_offset" in vals else k.offset,
    )
    return replace(
        gp,
        kernel=kernel,
        noise_variance=math.exp(vals["log_noise"]) if "log_noise" in vals else gp.noise_variance,
        mean_constant=vals.get("mean", gp.mean_constant),
    )


def _pack(gp):
    names, theta = ["log_variance"], [math.log(gp.kernel.variance)]
    if gp.kernel.kind in ("rbf", "matern52"):
        names.append("log_lengthscale")
        theta.append(math.log(gp.kernel.lengthscale))
    elif gp.kernel.kind == "linear" and gp.kernel.offset > 0:
        names.append("log_offset")
        theta.append(math.log(gp.kernel.offset))
    if gp.noise_variance > 0:
        names.append("log_noise")
        theta.append(math.log(gp.noise_variance))
    if gp.mean_kind == "constant":
        names.append("mean")
        theta.append(gp.mean_constant)
    return names, np.array(theta)


def log_marginal_likelihood(gp, X, y, return_grad=False):
    """``log N(y | m(X), K + sigma_n^2 I)`` and optionally its gradient.

    The gradient is taken w.r.t. the packed parameters (log-variances,
    log-lengthscale, log-offset, and the raw constant mean).
    """
    X = _as_2d(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch("targets and inputs have different lengths")
    n = X.shape[0]
    K, dK = _kernel_grads(gp.kernel, X)
    Ky = K + gp.noise_variance * np.eye(n)
    L = cholesky(Ky, gp.jitter)
    r = y - gp.mean(X)
    alpha = solve_spd(L, r)
    lml = -0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * _LOG_2PI
    if not return_grad:
        return float(lml)

    names, _ = _pack(gp)
    Kinv = solve_spd(L, np.eye(n))
    inner = np.outer(alpha, alpha) - Kinv
    grad = []
    for name in names:
        if name == "mean":
            grad.append(float(np.sum(alpha)))
        elif name == "log_noise":
            grad.append(0.5 * gp.noise_variance * float(np.trace(inner)))
        else:
            grad.append(0.5 * float(np.sum(inner * dK[name])))
    return float(lml), np.array(grad)


def pretrain(gp, X, y, epochs=100, lr=0.01, clip_norm=10.0, max_halvings=30, return_trace=False):
    """Fit the prior hyperparameters by maximising the marginal likelihood.

    Plain gradient ascent on log-hyperparameters with the gradient norm
    clipped at ``clip_norm``. A step that lowers the objective is halved
    (up to ``max_halvings`` times) and skipped if it still fails, so the trace
    never decreases.

    Returns the fitted :class:`GPPrior`, plus the per-epoch objective trace
    when ``return_trace`` is set.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2:
        if y.shape[1] != 1:
            raise DimensionMismatch("pretrain supports single-output targets only")
        y = y[:, 0]

    names, theta = _pack(gp)
    current = gp
    try:
        value, grad = log_marginal_likelihood(current, X, y, return_grad=True)
    except NotPositiveDefinite:
        current = replace(current, jitter=max(current.jitter, 1e-6))
        value, grad = log_marginal_likelihood(current, X, y, return_grad=True)
    if not np.isfinite(value):
        raise NonFiniteLoss(f"initial marginal likelihood is {value}")
    trace = [value]

    for epoch in range(epochs):
        gnorm = float(np.linalg.norm(grad))
        if not np.isfinite(gnorm):
            raise NonFiniteLoss(f"non-finite gradient at epoch {epoch}: {grad}")
        step = lr * (grad if gnorm <= clip_norm else grad * (clip_norm / gnorm))
        for _ in range(max_halvings):
            candidate = _unpack(current, theta + step, names)
            try:
                new_value, new_grad = log_marginal_likelihood(candidate, X, y, return_grad=True)
            except NotPositiveDefinite:
                new_value = -np.inf
            if np.isfinite(new_value) and new_value >= value - 1e-12:
                theta = theta + step
                current, value, grad = candidate, new_value, new_grad
                break
            step = 0.5 * step
        else:
            logger.debug("pretrain: no ascent step found at epoch %d", epoch)
        trace.append(value)

    return (current, np.array(trace)) if return_trace else current
