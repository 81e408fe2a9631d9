"""SGLD, SGHMC and their functional counterparts, plus the chain runner.

Every step function takes an explicit ``numpy.random.Generator`` and the
``noise`` flag; ``noise=False`` drops the injected Gaussian term, which turns
the samplers into their deterministic limits (used by the test-suite).
"""

from dataclasses import asdict, dataclass, field
import logging
import time

import numpy as np

from .data import MeasurementPolicy, draw_measurement_set, minibatches
from .energy import GaussianLikelihood, ParamPrior, functional_drift, param_drift
from .exceptions import NonFiniteState
from .gp import PriorFactorCache
from .linalg import make_rng

logger = logging.getLogger(__name__)

DYNAMICS = ("sgld", "sghmc", "fsgld", "fsghmc")


@dataclass(frozen=True)
class StepSchedule:
    """Piecewise-constant decay ``initial * decay ** (t // period)``."""

    initial: float = 1e-3
    decay: float = 0.9
    period: int = 5000

    def __post_init__(self):
        if not self.initial > 0:
            raise ValueError("initial step size must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay factor must lie in (0, 1]")
        if self.period < 1:
            raise ValueError("decay period must be >= 1")

    def __call__(self, t):
        return step_size(self, t)


def step_size(schedule, t):
    if t < 0:
        raise ValueError("iteration index must be >= 0")
    return schedule.initial * schedule.decay ** (t // schedule.period)


@dataclass(frozen=True)
class SamplerConfig:
    """Run-length and dynamics settings for :func:`run_chain`.

    ``mass`` is a scalar or a per-parameter diagonal. For the Hamiltonian
    samplers one *iteration* is a momentum refresh followed by
    ``leapfrog_steps`` updates; for the Langevin samplers it is one update.
    ``init_scale`` sets ``w0 ~ N(0, init_scale^2 I)``.
    """

    burn_in: int = 2000
    num_samples: int = 80
    thin: int = 100
    batch_size: int = 32
    friction: float = 0.1
    mass: float = 1.0
    leapfrog_steps: int = 5
    seed: int = 0
    schedule: StepSchedule = field(default_factory=StepSchedule)
    init_scale: float = 1.0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        for name in ("num_samples", "thin", "batch_size", "leapfrog_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.friction > 0:
            raise ValueError("friction must be positive")
        if not np.all(np.asarray(self.mass) > 0):
            raise ValueError("mass entries must be positive")

    def to_dict(self):
        d = asdict(self)
        d["mass"] = np.asarray(self.mass).tolist()
        return d

    @property
    def total_iterations(self):
        return self.burn_in + self.num_samples * self.thin


@dataclass
class SampleSet:
    """Retained parameter samples and the per-iteration log-posterior trace."""

    samples: np.ndarray
    log_post: np.ndarray
    dynamics: str
    config: dict
    wall_time: float = 0.0

    def __len__(self):
        return self.samples.shape[0]

    @property
    def n_params(self):
        return self.samples.shape[1]


@dataclass
class ModelBundle:
    """Everything a chain needs besides the sampler settings.

    ``gp`` and ``policy`` are only consulted by the functional dynamics,
    ``param_prior`` only by the parameter-space ones.
    """

    model: object
    X: np.ndarray
    y: np.ndarray
    lik: GaussianLikelihood = field(default_factory=GaussianLikelihood)
    param_prior: ParamPrior = field(default_factory=ParamPrior)
    gp: object = None
    policy: MeasurementPolicy = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.X.shape[0] == 0:
            raise ValueError("dataset is empty")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("inputs and targets differ in length")


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteState("sampler produced a non-finite state")


def _inv_mass(mass, z):
    return z / mass


def sgld_step(w, drift, eps, rng, noise=True):
    """``w + eps * drift + sqrt(2 eps) * eta``."""
    w_new = w + eps * drift
    if noise:
        w_new = w_new + np.sqrt(2.0 * eps) * rng.standard_normal(np.shape(w))
    _check_finite(w_new)
    return w_new


def sghmc_step(w, z, drift, eps, friction, mass, rng, noise=True):
    """One friction-damped Hamiltonian update.

    ``w' = w + eps M^-1 z`` and
    ``z' = z + eps * drift - eps C M^-1 z + sqrt(2 C eps) eta``, both from the
    current ``(w, z)``; ``drift`` is ``-grad U~`` evaluated at ``w``.
    """
    v = _inv_mass(mass, z)
    w_new = w + eps * v
    z_new = z + eps * drift - eps * friction * v
    if noise:
        z_new = z_new + np.sqrt(2.0 * friction * eps) * rng.standard_normal(np.shape(z))
    _check_finite(w_new, z_new)
    return w_new, z_new


def fsgld_step(model, w, X_b, y_b, N, X_M, gp, lik, eps, rng, noise=True, cache=None):
    """Functional SGLD update with the GP prior marginalised on ``X_M``."""
    drift = functional_drift(model, w, X_b, y_b, N, X_M, gp, lik, cache=cache)
    return sgld_step(w, drift, eps, rng, noise=noise)


def fsghmc_step(model, w, z, X_b, y_b, N, X_M, gp, lik, eps, friction, mass, rng,
                noise=True, cache=None):
    """Functional SGHMC update.

    The auxiliary function is the identity embedding of the momentum with
    ``p(g) = N(0, M)``, so ``grad_z g = I`` and ``grad_g log p(g) = -M^-1 z``.
    """
    drift = functional_drift(model, w, X_b, y_b, N, X_M, gp, lik, cache=cache)
    return sghmc_step(w, z, drift, eps, friction, mass, rng, noise=noise)


def resample_momentum(mass, k, rng):
    """Draw ``z ~ N(0, M)`` for a diagonal mass."""
    return np.sqrt(mass) * rng.standard_normal(k)


def _batch_stream(X, y, batch_size, rng):
    while True:
        yield from minibatches(X, y, batch_size, rng)


def run_chain(dynamics, bundle, config, w0=None):
    """Burn in, then keep every ``thin``-th state until ``num_samples`` are held.

    Independent generator streams (initialisation, minibatch order,
    measurement sets, injected noise) are split off ``config.seed``, so
    switching between a parameter-space and a functional sampler leaves the
    shared streams untouched.

    Raises
    ------
    NonFiniteState
        With ``iteration`` and ``last_state`` of the failing chain.
    """
    dynamics = dynamics.lower()
    if dynamics not in DYNAMICS:
        raise ValueError(f"unknown dynamics {dynamics!r}; choose from {DYNAMICS}")
    functional = dynamics.startswith("f")
    hamiltonian = dynamics.endswith("hmc")
    if functional and (bundle.gp is None or bundle.policy is None):
        raise ValueError("functional dynamics need a GP prior and a measurement policy")

    root = np.random.SeedSequence(config.seed)
    init_ss, batch_ss, meas_ss, noise_ss = root.spawn(4)
    init_rng, batch_rng = make_rng(init_ss), make_rng(batch_ss)
    meas_rng, noise_rng = make_rng(meas_ss), make_rng(noise_ss)

    model = bundle.model
    N = bundle.X.shape[0]
    k = model.n_params
    mass = np.asarray(config.mass, dtype=np.float64)
    w = model.init_params(init_rng, config.init_scale) if w0 is None else np.array(w0, dtype=np.float64)
    batches = _batch_stream(bundle.X, bundle.y, min(config.batch_size, N), batch_rng)
    cache = PriorFactorCache()

    def drift_at(w):
        X_b, y_b = next(batches)
        if functional:
            X_M = draw_measurement_set(bundle.policy, bundle.X, meas_rng)
            return functional_drift(model, w, X_b, y_b, N, X_M, bundle.gp, bundle.lik,
                                    cache=cache, return_log_post=True)
        return param_drift(model, w, X_b, y_b, N, bundle.param_prior, bundle.lik,
                           return_log_post=True)

    total = config.total_iterations
    log_post = np.empty(total)
    samples = []
    start = time.perf_counter()
    for t in range(total):
        eps = step_size(config.schedule, t)
        last = w
        try:
            if hamiltonian:
                z = resample_momentum(mass, k, noise_rng)
                for _ in range(config.leapfrog_steps):
                    drift, lp = drift_at(w)
                    w, z = sghmc_step(w, z, drift, eps, config.friction, mass, noise_rng)
            else:
                drift, lp = drift_at(w)
                w = sgld_step(w, drift, eps, noise_rng)
        except NonFiniteState as err:
            raise NonFiniteState(
                f"{dynamics}: non-finite state at iteration {t} (step size {eps:g})",
                iteration=t, last_state=last,
            ) from err
        log_post[t] = lp
        if t >= config.burn_in and (t - config.burn_in + 1) % config.thin == 0:
            samples.append(w.copy())

    wall = time.perf_counter() - start
    logger.info("%s: %d iterations, %d samples in %.2fs", dynamics, total, len(samples), wall)
    return SampleSet(
        samples=np.array(samples),
        log_post=log_post,
        dynamics=dynamics,
        config=config.to_dict(),
        wall_time=wall,
    )
