"""Stationarity checks against targets with closed-form posteriors.

``gaussian2d`` runs the parameter-space samplers on a correlated 2-D
Gaussian, many independent chains at once. ``conjugate_linear`` runs the
functional samplers on Bayesian linear regression, whose prior ``w ~ N(0, I)``
is exactly a GP with kernel ``t t' + 1``; the posterior of the function values
on a 5-point grid is then available from GP regression formulas.
"""

from dataclasses import asdict, dataclass, field
import json

import numpy as np

from .energy import GaussianLikelihood
from .exceptions import ConfigError
from .gp import GPPrior, Kernel, PriorFactorCache, kernel_matrix, prior_grad
from .linalg import make_rng
from .mlp import MLPArchitecture
from .samplers import fsghmc_step, fsgld_step, resample_momentum, sghmc_step, sgld_step

TARGETS = ("gaussian2d", "conjugate_linear")


@dataclass(frozen=True)
class VerifyConfig:
    """Run settings for :func:`verify_tractable`.

    ``steps`` counts post-burn-in updates per chain (inner leapfrog updates
    for the Hamiltonian samplers, whose momentum is redrawn every
    ``leapfrog_steps`` updates). Mean errors pass if they are within
    ``mean_tol`` absolutely or, when ``mean_tol`` is ``None``, within
    ``se_mult`` Monte-Carlo standard errors. Second moments pass within
    ``var_tol`` relative error.
    """

    steps: int = 100_000
    burn_in: int = 5000
    step_size: float = 5e-4
    chains: int = 1
    leapfrog_steps: int = 1000
    friction: float = 0.1
    mass: float = 1.0
    seed: int = 0
    n_data: int = 10
    noise_std: float = 0.5
    mean_tol: float = None
    se_mult: float = 3.0
    var_tol: float = 0.15
    record_every: int = 10

    def __post_init__(self):
        for name in ("steps", "chains", "leapfrog_steps", "record_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"verify.{name} must be >= 1")
        if self.burn_in < 0 or self.n_data < 0:
            raise ConfigError("verify.burn_in and verify.n_data must be >= 0")
        if not self.step_size > 0:
            raise ConfigError("verify.step_size must be positive")


@dataclass
class VerificationReport:
    target: str
    dynamics: str
    analytic_mean: list
    empirical_mean: list
    mean_standard_error: list
    analytic_second: list
    empirical_second: list
    second_moment: str
    tolerances: dict
    checks: list = field(default_factory=list)
    passed: bool = False

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def batch_means_se(trace, n_batches=20):
    """Monte-Carlo standard error of the mean of each column.

    ``trace`` has shape ``(chains, T, d)``. With 10 or more chains the spread
    of per-chain means is used; otherwise each chain is cut into
    ``n_batches`` contiguous batches and their means pooled.
    """
    trace = np.asarray(trace, dtype=np.float64)
    C, T, _ = trace.shape
    if C >= 10:
        return trace.mean(axis=1).std(axis=0, ddof=1) / np.sqrt(C)
    b = max(2, min(n_batches, T))
    usable = (T // b) * b
    means = trace[:, :usable].reshape(C, b, usable // b, -1).mean(axis=2).reshape(C * b, -1)
    return means.std(axis=0, ddof=1) / np.sqrt(C * b)


# --- gaussian2d ------------------------------------------------------------

GAUSS_MEAN = np.array([1.0, -1.0])
GAUSS_COV = np.array([[1.0, 0.5], [0.5, 2.0]])


def _run_gaussian(dynamics, cfg):
    prec = np.linalg.inv(GAUSS_COV)
    rng = make_rng(np.random.SeedSequence(cfg.seed))
    shape = (cfg.chains, 2)
    w = np.zeros(shape)
    z = None
    every = cfg.record_every
    rec = np.empty((cfg.chains, cfg.steps // every, 2))
    eps = cfg.step_size
    for t in range(cfg.burn_in + cfg.steps):
        drift = -(w - GAUSS_MEAN) @ prec
        if dynamics == "sgld":
            w = sgld_step(w, drift, eps, rng)
        else:
            if t % cfg.leapfrog_steps == 0:
                z = resample_momentum(cfg.mass, shape, rng)
            w, z = sghmc_step(w, z, drift, eps, cfg.friction, cfg.mass, rng)
        s = t - cfg.burn_in + 1
        if s > 0 and s % every == 0:
            rec[:, s // every - 1] = w
    return rec


# --- conjugate linear ------------------------------------------------------

GRID = np.linspace(-1.0, 1.0, 5)[:, None]
_TRUE_SLOPE, _TRUE_INTERCEPT = 0.5, -0.3


def conjugate_problem(n_data, noise_std, seed):
    """Data, prior and closed-form grid posterior ``(mean, cov)``."""
    rng = make_rng(np.random.SeedSequence([seed, 1]))
    t = rng.uniform(-1.0, 1.0, (n_data, 1))
    y = _TRUE_SLOPE * t + _TRUE_INTERCEPT + noise_std * rng.standard_normal((n_data, 1))
    gp = GPPrior(Kernel("linear", variance=1.0, offset=1.0), mean_kind="zero")
    Kgg = kernel_matrix(gp.kernel, GRID)
    if n_data == 0:
        return t, y, gp, np.zeros(GRID.shape[0]), Kgg
    Kxx = kernel_matrix(gp.kernel, t) + noise_std**2 * np.eye(n_data)
    Kgx = kernel_matrix(gp.kernel, GRID, t)
    mean = Kgx @ np.linalg.solve(Kxx, y[:, 0])
    cov = Kgg - Kgx @ np.linalg.solve(Kxx, Kgx.T)
    return t, y, gp, mean, cov


def _run_conjugate(dynamics, cfg):
    t, y, gp, _, _ = conjugate_problem(cfg.n_data, cfg.noise_std, cfg.seed)
    model = MLPArchitecture((1, 1), activation="identity")
    lik = GaussianLikelihood(cfg.noise_std)
    N = cfg.n_data
    cache = PriorFactorCache()
    every = cfg.record_every
    rec = np.empty((cfg.chains, cfg.steps // every, GRID.shape[0]))
    eps = cfg.step_size
    for c in range(cfg.chains):
        rng = make_rng(np.random.SeedSequence([cfg.seed, 2, c]))
        w = np.zeros(model.n_params)
        z = None
        for step in range(cfg.burn_in + cfg.steps):
            if N == 0:
                # no likelihood term: the prior VJP is the whole drift
                drift = model.vjp(w, GRID, prior_grad(gp, GRID, model.forward(w, GRID), cache=cache))
                if dynamics == "fsgld":
                    w = sgld_step(w, drift, eps, rng)
                else:
                    if step % cfg.leapfrog_steps == 0:
                        z = resample_momentum(cfg.mass, model.n_params, rng)
                    w, z = sghmc_step(w, z, drift, eps, cfg.friction, cfg.mass, rng)
            elif dynamics == "fsgld":
                w = fsgld_step(model, w, t, y, N, GRID, gp, lik, eps, rng, cache=cache)
            else:
                if step % cfg.leapfrog_steps == 0:
                    z = resample_momentum(cfg.mass, model.n_params, rng)
                w, z = fsghmc_step(model, w, z, t, y, N, GRID, gp, lik, eps,
                                   cfg.friction, cfg.mass, rng, cache=cache)
            s = step - cfg.burn_in + 1
            if s > 0 and s % every == 0:
                rec[c, s // every - 1] = model.forward(w, GRID)[:, 0]
    return rec


def _pooled_cov(rec):
    flat = rec.reshape(-1, rec.shape[-1])
    return np.cov(flat, rowvar=False, ddof=1)


def verify_tractable(target, dynamics, config=None):
    """Compare long-run sampler moments with the analytic posterior.

    ``gaussian2d`` accepts ``sgld``/``sghmc``; ``conjugate_linear`` accepts
    ``fsgld``/``fsghmc``. For ``gaussian2d`` every covariance entry is
    checked; for ``conjugate_linear`` the marginal variances on the grid.
    """
    cfg = config or VerifyConfig()
    dynamics = dynamics.lower()
    if target == "gaussian2d":
        if dynamics not in ("sgld", "sghmc"):
            raise ConfigError("gaussian2d verifies the parameter-space samplers sgld/sghmc")
        rec = _run_gaussian(dynamics, cfg)
        mu, second_true = GAUSS_MEAN, GAUSS_COV
        second_emp = _pooled_cov(rec)
        kind = "covariance"
    elif target == "conjugate_linear":
        if dynamics not in ("fsgld", "fsghmc"):
            raise ConfigError("conjugate_linear verifies the functional samplers fsgld/fsghmc")
        rec = _run_conjugate(dynamics, cfg)
        _, _, _, mu, cov = conjugate_problem(cfg.n_data, cfg.noise_std, cfg.seed)
        second_true = np.diag(cov)
        second_emp = np.diag(_pooled_cov(rec))
        kind = "variance"
    else:
        raise ConfigError(f"unknown target {target!r}; choose from {TARGETS}")

    emp_mean = rec.reshape(-1, rec.shape[-1]).mean(axis=0)
    se = batch_means_se(rec)
    checks = []
    for i, (a, e, s) in enumerate(zip(mu, emp_mean, se)):
        err = abs(e - a)
        tol = cfg.mean_tol if cfg.mean_tol is not None else cfg.se_mult * s
        checks.append({"quantity": f"mean[{i}]", "analytic": float(a), "empirical": float(e),
                       "abs_error": float(err), "tolerance": float(tol), "pass": bool(err <= tol)})
    for idx in np.ndindex(np.shape(second_true)):
        a, e = float(second_true[idx]), float(second_emp[idx])
        rel = abs(e - a) / abs(a) if a != 0 else abs(e)
        checks.append({"quantity": f"{kind}{list(idx)}", "analytic": a, "empirical": e,
                       "rel_error": float(rel), "tolerance": cfg.var_tol,
                       "pass": bool(rel <= cfg.var_tol)})
    return VerificationReport(
        target=target,
        dynamics=dynamics,
        analytic_mean=np.asarray(mu).tolist(),
        empirical_mean=emp_mean.tolist(),
        mean_standard_error=se.tolist(),
        analytic_second=np.asarray(second_true).tolist(),
        empirical_second=np.asarray(second_emp).tolist(),
        second_moment=kind,
        tolerances={"mean_tol": cfg.mean_tol, "se_mult": cfg.se_mult, "var_tol": cfg.var_tol},
        checks=checks,
        passed=all(c["pass"] for c in checks),
    )
