"""Command line: ``funcmcmc {pretrain,sample,evaluate,verify,bandit}``.

Each command writes into ``--out`` (created if needed) using fixed file
names, and every artifact embeds the resolved config and seed.

Exit codes: 0 success, 1 verification failed, 2 configuration or input
error, 3 numerical failure.
"""

import argparse
import logging
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__
from .artifacts import read_samples, write_diagnostics, write_json, write_samples
from .bandit import BanditConfig, MushroomEnv, load_mushroom, run_bandit, write_regret_csv
from .config import load_config
from .evaluate import export_bands
from .exceptions import (
    ConfigError, DegenerateColumn, EmptySampleSet, NonFiniteLoss, NonFiniteState,
    NotPositiveDefinite, ParseError, PolicyError, SchemaMismatch,
)
from .experiments import (
    architecture, architecture_record, check_architecture, fit, load_data, load_prior,
    pretrain_prior, prior_document, regression_metrics, run_uci_splits, synthetic_metrics,
)
from .samplers import StepSchedule
from .verify import VerifyConfig, verify_tractable

logger = logging.getLogger("funcmcmc")

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

CONFIG_FILE = "config.resolved"
PRIOR_FILE = "prior.json"
SAMPLES_FILE = "samples.bin"
DIAGNOSTICS_FILE = "diagnostics.csv"
METRICS_FILE = "metrics.json"
BANDS_FILE = "bands.csv"
REGRET_FILE = "regret.csv"
VERIFY_FILE = "verify.json"


def _meta(cfg):
    return {"config": cfg, "seed": cfg.seed}


def _write_config(cfg, out):
    (out / CONFIG_FILE).write_text(cfg.to_json() + "\n", encoding="utf-8")


def _require_regression(cfg, command):
    if cfg.kind not in ("synthetic1d", "uci"):
        raise ConfigError(f"'{command}' needs experiment.kind synthetic1d or uci, got {cfg.kind!r}")


def _resolve_prior(cfg, train, out):
    """Prior for functional dynamics: ``prior.file``, a saved one, or fit now."""
    if not cfg.dynamics.startswith("f"):
        return None, None
    if cfg["prior"]["file"]:
        path = Path(cfg["prior"]["file"])
        if not path.exists():
            raise ConfigError(f"prior.file {path} does not exist")
        return load_prior(path), path.name
    saved = out / PRIOR_FILE
    if saved.exists():
        return load_prior(saved), saved.name
    gp, trace = pretrain_prior(cfg, train)
    write_json(saved, prior_document(cfg, gp, trace, train.provenance))
    return gp, saved.name


def cmd_pretrain(cfg, args, out):
    _require_regression(cfg, "pretrain")
    train, _ = load_data(cfg)
    gp, trace = pretrain_prior(cfg, train)
    write_json(out / PRIOR_FILE, prior_document(cfg, gp, trace, train.provenance))
    print(f"prior: {gp.to_dict()}")
    print(f"log marginal likelihood {trace[0]:.4f} -> {trace[-1]:.4f} over {len(trace) - 1} epochs")
    return EXIT_OK


def cmd_sample(cfg, args, out):
    _require_regression(cfg, "sample")
    train, _ = load_data(cfg)
    gp, prior_source = _resolve_prior(cfg, train, out)
    est = fit(cfg, train, gp=gp)
    sset = est.sample_set_
    header = {
        "format": "funcmcmc-samples",
        "dynamics": cfg.dynamics,
        "seed": cfg.seed,
        "architecture": architecture_record(est.model_),
        "prior": gp.to_dict() if gp is not None else None,
        "prior_source": prior_source,
        "dataset": train.provenance,
        "split": cfg["data"]["split"] if cfg.kind == "uci" else None,
        "standardization": train.record.to_dict() if train.record is not None else None,
        "config": cfg,
    }
    write_samples(out / SAMPLES_FILE, sset.samples, header)
    sched = StepSchedule(cfg["sampler"]["step_size"], cfg["sampler"]["decay"],
                         cfg["sampler"]["decay_period"])
    write_diagnostics(out / DIAGNOSTICS_FILE, sset.log_post, sched, _meta(cfg))
    print(f"{cfg.dynamics}: K={len(sset)} samples of {sset.n_params} parameters, "
          f"wall time {sset.wall_time:.2f}s, final log-posterior surrogate {sset.log_post[-1]:.4f}")
    return EXIT_OK


def _evaluate_file(cfg, path, out):
    header, samples = read_samples(path)
    train, test = load_data(cfg)
    model = architecture(cfg, train.X.shape[1])
    check_architecture(header, model)
    noise = cfg["likelihood"]["noise_std"]
    metrics = {"samples_file": Path(path).name, "sample_header_seed": header.get("seed"),
               "dynamics": header.get("dynamics")}
    if cfg.kind == "synthetic1d":
        stats, summary, grid = synthetic_metrics(model, samples, train, noise,
                                                 cfg["evaluate"]["grid_points"])
        metrics.update(stats)
        export_bands(summary, grid, out / BANDS_FILE, header=_meta(cfg))
    else:
        metrics["split"] = cfg["data"]["split"]
        metrics.update(regression_metrics(model, samples, test, noise))
    return metrics


def cmd_evaluate(cfg, args, out):
    _require_regression(cfg, "evaluate")
    path = Path(args.samples) if args.samples else out / SAMPLES_FILE
    if args.samples or cfg.kind == "synthetic1d":
        if not path.exists():
            raise ConfigError(f"sample file {path} not found; run 'funcmcmc sample' first")
        metrics = _evaluate_file(cfg, path, out)
    else:
        metrics = run_uci_splits(cfg)
        metrics["dynamics"] = cfg.dynamics
    metrics.update(_meta(cfg))
    write_json(out / METRICS_FILE, metrics)
    shown = metrics.get("summary", {k: v for k, v in metrics.items() if isinstance(v, float)})
    for key, value in shown.items():
        print(f"{key}: {value:.6g}")
    return EXIT_OK


def cmd_verify(cfg, args, out):
    v = cfg["verify"]
    vcfg = VerifyConfig(
        steps=v["steps"], burn_in=v["burn_in"], step_size=v["step_size"], chains=v["chains"],
        leapfrog_steps=v["leapfrog_steps"], friction=cfg["sampler"]["friction"],
        mass=cfg["sampler"]["mass"], seed=cfg.seed, n_data=v["n_data"],
        noise_std=v["noise_std"], mean_tol=v["mean_tol"], se_mult=v["se_mult"],
        var_tol=v["var_tol"],
    )
    report = verify_tractable(v["target"], cfg.dynamics, vcfg)
    doc = report.to_dict()
    doc.update(_meta(cfg))
    write_json(out / VERIFY_FILE, doc)
    for c in report.checks:
        err = c.get("abs_error", c.get("rel_error"))
        print(f"{'ok  ' if c['pass'] else 'FAIL'} {c['quantity']}: analytic {c['analytic']:.5g} "
              f"empirical {c['empirical']:.5g} error {err:.3g} (tol {c['tolerance']:.3g})")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def bandit_config(cfg):
    b = cfg["bandit"]
    return BanditConfig(
        buffer_size=b["buffer_size"], batch_size=b["batch_size"], train_steps=b["train_steps"],
        warmup=b["warmup"], schedule=StepSchedule(b["step_size"], b["decay"], b["decay_period"]),
        noise_std=b["noise_std"], reward_scale=b["reward_scale"],
        prior_variance=cfg["param_prior"]["variance"], init_scale=b["init_scale"],
        m_measure=b["m_measure"], m_inducing=b["m_inducing"],
        prior_lengthscale=b["prior_lengthscale"], prior_jitter=b["prior_jitter"],
        prior_source=b["prior_source"], pretrain_points=b["pretrain_points"],
        hidden=tuple(cfg["model"]["hidden"]),
    )


def cmd_bandit(cfg, args, out):
    b = cfg["bandit"]
    contexts, edible, encoding = load_mushroom(cfg["data"]["path"])
    env = MushroomEnv(contexts, edible, b["penalty_prob"])
    trace = run_bandit(b["agent"], env, b["rounds"], seed=cfg.seed, config=bandit_config(cfg))
    write_regret_csv(trace, out / REGRET_FILE, header=_meta(cfg))
    metrics = {
        "agent": b["agent"],
        "rounds": b["rounds"],
        "cumulative_regret": float(trace["cumulative_regret"][-1]),
        "total_reward": float(np.sum(trace["reward"])),
        "n_instances": int(env.n_instances),
        "encoding": encoding,
    }
    metrics.update(_meta(cfg))
    write_json(out / METRICS_FILE, metrics)
    print(f"{b['agent']}: cumulative regret {metrics['cumulative_regret']:.1f} "
          f"after {b['rounds']} rounds")
    return EXIT_OK


COMMANDS = {
    "pretrain": (cmd_pretrain, "fit the GP prior by marginal likelihood"),
    "sample": (cmd_sample, "run a sampler and save the retained samples"),
    "evaluate": (cmd_evaluate, "score samples (or run the UCI split loop)"),
    "verify": (cmd_verify, "check a sampler against an analytic posterior"),
    "bandit": (cmd_bandit, "run the mushroom bandit"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="funcmcmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--seed", type=int, help="overrides experiment.seed")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--dynamics", choices=("sgld", "sghmc", "fsgld", "fsghmc"),
                        help="overrides experiment.dynamics")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set section.key=value; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "evaluate":
            p.add_argument("--samples", help="sample file (default: OUT/samples.bin)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, args.override, seed=args.seed, dynamics=args.dynamics)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_config(cfg, out)
        start = time.perf_counter()
        code = handler(cfg, args, out)
        logger.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
        return code
    except (ConfigError, SchemaMismatch, ParseError, DegenerateColumn, PolicyError,
            EmptySampleSet) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        name = getattr(err, "filename", None)
        print(f"error: {err.strerror or err}{f': {name}' if name else ''}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteState, NonFiniteLoss, NotPositiveDefinite, FloatingPointError) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
