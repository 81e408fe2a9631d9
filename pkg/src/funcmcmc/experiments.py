"""Experiment runners shared by the command line and the acceptance suite.

Everything here is driven by a resolved :class:`~funcmcmc.config.RunConfig`.
"""

import json

import numpy as np

from .data import load_csv, split, synthetic_1d, synthetic_mean
from .energy import GaussianLikelihood
from .estimator import FunctionalBNNRegressor, build_prior
from .evaluate import (
    mean_abs_second_difference, nll, predictive_ensemble, region_mask, rmse,
)
from .exceptions import ConfigError, SchemaMismatch
from .gp import GPPrior
from .mlp import MLPArchitecture

# evaluation regions of the 1-D extrapolation task
LEFT_EXTRAPOLATION = (-1.0, -0.75)
LEFT_TRAIN = (-0.75, -0.25)
CENTRE_GAP = (-0.25, 0.25)
TRAIN_REGIONS = ((-0.75, -0.25), (0.25, 0.75))


def split_seed(seed, index):
    """Shuffle seed of split ``index`` for a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def load_data(cfg, split_index=None):
    """Return ``(train, test)``; ``test`` is ``None`` for the synthetic task."""
    d = cfg["data"]
    if cfg.kind == "synthetic1d":
        return synthetic_1d(d["n_points"], seed=cfg.seed, noise_std=d["noise_std"]), None
    if cfg.kind == "uci":
        if not d["path"]:
            raise ConfigError("data.path is required for uci experiments")
        ds = load_csv(d["path"])
        idx = d["split"] if split_index is None else split_index
        return split(ds, d["test_fraction"], seed=split_seed(cfg.seed, idx), scale=d["standardize"])
    raise ConfigError(f"experiment kind {cfg.kind!r} has no regression data")


def architecture(cfg, n_features):
    return MLPArchitecture((n_features,) + tuple(cfg["model"]["hidden"]) + (1,),
                           cfg["model"]["activation"])


def architecture_record(model):
    return {"layer_widths": list(model.layer_widths), "activation": model.activation}


def pretrain_prior(cfg, train):
    """Fit the GP prior described by ``[prior]`` to the training data."""
    p = cfg["prior"]
    return build_prior(
        train.X, train.y[:, 0], kernel=p["kernel.type"], lengthscale=p["kernel.lengthscale"],
        variance=p["kernel.variance"], offset=p["kernel.offset"], mean=p["mean.kind"],
        noise_variance=p["noise.variance"], epochs=p["pretrain.epochs"], lr=p["pretrain.lr"],
        jitter=p["jitter"], return_trace=True,
    )


def prior_document(cfg, gp, trace, provenance):
    return {"config": cfg, "seed": cfg.seed, "dataset": provenance,
            "prior": gp.to_dict(), "trace": np.asarray(trace).tolist()}


def load_prior(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return GPPrior.from_dict(doc["prior"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"{path}: not a prior file ({err})") from None


def make_estimator(cfg, gp=None):
    s, m, p = cfg["sampler"], cfg["measurement"], cfg["prior"]
    return FunctionalBNNRegressor(
        hidden_layer_sizes=tuple(cfg["model"]["hidden"]),
        activation=cfg["model"]["activation"],
        dynamics=cfg.dynamics,
        kernel=p["kernel.type"],
        lengthscale=p["kernel.lengthscale"],
        kernel_variance=p["kernel.variance"],
        kernel_offset=p["kernel.offset"],
        prior_noise_variance=p["noise.variance"],
        pretrain_epochs=p["pretrain.epochs"],
        pretrain_lr=p["pretrain.lr"],
        prior_jitter=p["jitter"],
        gp_prior=gp,
        noise_std=cfg["likelihood"]["noise_std"],
        weight_prior_variance=cfg["param_prior"]["variance"],
        step_size=s["step_size"],
        step_decay=s["decay"],
        decay_period=s["decay_period"],
        burn_in=s["burn_in"],
        num_samples=s["num_samples"],
        thin=s["thin"],
        batch_size=s["batch_size"],
        friction=s["friction"],
        mass=s["mass"],
        leapfrog_steps=s["leapfrog_steps"],
        init_scale=s["init_scale"],
        m_train=m["m_train"],
        m_inducing=m["m_inducing"],
        box=(m["low"], m["high"]),
        random_state=cfg.seed,
    )


def fit(cfg, train, gp=None):
    """Pre-train (functional dynamics, no ``gp`` given) and sample."""
    if gp is None and cfg.dynamics.startswith("f"):
        gp, _ = pretrain_prior(cfg, train)
    return make_estimator(cfg, gp).fit(train.X, train.y[:, 0])


def check_architecture(header, model):
    want = architecture_record(model)
    got = header.get("architecture")
    if got != want:
        raise SchemaMismatch(f"sample file architecture {got} does not match the config {want}")
    if header.get("k") != model.n_params:
        raise SchemaMismatch(f"sample file holds {header.get('k')} parameters, "
                             f"the config implies {model.n_params}")


def synthetic_metrics(model, samples, train, noise_std, grid_points=200):
    """Grid predictive summary and the extrapolation-task statistics."""
    lik = GaussianLikelihood(noise_std)
    grid = np.linspace(-1.0, 1.0, grid_points)[:, None]
    summary = predictive_ensemble(model, samples, grid, lik)
    x = grid[:, 0]
    in_train = region_mask(x, *TRAIN_REGIONS[0]) | region_mask(x, *TRAIN_REGIONS[1])
    left, left_train = region_mask(x, *LEFT_EXTRAPOLATION), region_mask(x, *LEFT_TRAIN)
    centre = region_mask(x, *CENTRE_GAP)
    at_train = predictive_ensemble(model, samples, train.X, lik)
    metrics = {
        "num_samples": int(samples.shape[0]),
        "rmse_train_targets": rmse(at_train.mean, train.y[:, 0]),
        "nll_train_targets": nll(at_train, train.y[:, 0]),
        "rmse_true_train_region": rmse(summary.mean[in_train], synthetic_mean(x[in_train])),
        "std_total_left_extrapolation": float(summary.std_total[left].mean()),
        "std_total_left_train": float(summary.std_total[left_train].mean()),
        "std_param_left_extrapolation": float(summary.std_param[left].mean()),
        "std_param_left_train": float(summary.std_param[left_train].mean()),
        "curvature_centre": mean_abs_second_difference(summary.mean[centre]),
    }
    return metrics, summary, grid


def regression_metrics(model, samples, test, noise_std):
    """Test RMSE and NLL on the (standardised) target scale.

    ``rmse_original`` rescales the RMSE to target units when a
    standardisation record is present.
    """
    s = predictive_ensemble(model, samples, test.X, GaussianLikelihood(noise_std))
    y = test.y[:, 0]
    out = {"n_test": int(y.size), "rmse": rmse(s.mean, y), "nll": nll(s, y)}
    if test.record is not None:
        out["rmse_original"] = out["rmse"] * float(np.ravel(test.record.y_std)[0])
    return out


def run_uci_splits(cfg, n_splits=None):
    """Fit and score ``data.splits`` independent splits.

    Returns ``{"splits": [per-split rows], "summary": {mean, std}}``.
    """
    n_splits = cfg["data"]["splits"] if n_splits is None else n_splits
    rows = []
    for i in range(n_splits):
        train, test = load_data(cfg, split_index=i)
        est = fit(cfg, train)
        row = {"split": i}
        row.update(regression_metrics(est.model_, est.samples_, test, cfg["likelihood"]["noise_std"]))
        rows.append(row)
    summary = {}
    for key in ("rmse", "nll"):
        vals = np.array([r[key] for r in rows])
        summary[f"{key}_mean"] = float(vals.mean())
        summary[f"{key}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return {"splits": rows, "summary": summary}
