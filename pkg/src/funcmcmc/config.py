"""Run configuration: an INI file with fixed sections, validated up front.

Every key has a type and a default; unknown sections or keys, bad values and
duplicate entries raise :class:`ConfigError` naming the offending line.
``--override section.key=value`` flags are applied on top of the file.
"""

import configparser
import json

from .exceptions import ConfigError

EXPERIMENTS = ("synthetic1d", "uci", "verify", "bandit")
DYNAMICS = ("sgld", "sghmc", "fsgld", "fsghmc")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    parse.__name__ = "one of " + "|".join(options)
    return parse


def _optional(parse):
    def inner(text):
        return None if text.strip().lower() in ("", "none", "auto") else parse(text)
    inner.__name__ = f"{parse.__name__} or auto"
    return inner


def _int_list(text):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return [int(p) for p in parts]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


_int_list.__name__ = "integer list"
_bool.__name__ = "boolean"

# section -> key -> (parser, default); None defaults mean "derive at run time"
SCHEMA = {
    "experiment": {
        "kind": (_choice(*EXPERIMENTS), "synthetic1d"),
        "dynamics": (_choice(*DYNAMICS), "fsgld"),
        "seed": (int, 0),
    },
    "data": {
        "path": (str, ""),
        "n_points": (int, 20),
        "noise_std": (float, 0.5),
        "test_fraction": (float, 0.1),
        "splits": (int, 5),
        "split": (int, 0),
        "standardize": (_bool, True),
    },
    "model": {
        "hidden": (_int_list, [100, 100]),
        "activation": (_choice("tanh", "relu", "identity"), "tanh"),
    },
    "likelihood": {
        "noise_std": (float, 0.5),
    },
    "param_prior": {
        "variance": (float, 1.0),
    },
    "prior": {
        "file": (str, ""),
        "kernel.type": (_choice("rbf", "matern52", "linear", "constant"), "rbf"),
        "kernel.lengthscale": (float, 0.2),
        "kernel.variance": (float, 1.0),
        "kernel.offset": (float, 1.0),
        "mean.kind": (_choice("zero", "constant"), "constant"),
        "noise.variance": (float, 0.25),
        "pretrain.epochs": (int, 100),
        "pretrain.lr": (float, 0.01),
        "jitter": (float, 1e-2),
    },
    "measurement": {
        "m_train": (_optional(int), None),
        "m_inducing": (int, 40),
        "low": (float, -1.0),
        "high": (float, 1.0),
    },
    "sampler": {
        "step_size": (_optional(float), None),
        "decay": (float, 0.9),
        "decay_period": (int, 5000),
        "burn_in": (int, 2000),
        "num_samples": (int, 80),
        "thin": (int, 100),
        "batch_size": (int, 32),
        "friction": (float, 0.1),
        "mass": (float, 1.0),
        "leapfrog_steps": (int, 5),
        "init_scale": (float, 1.0),
    },
    "evaluate": {
        "grid_points": (int, 200),
    },
    "verify": {
        "target": (_choice("gaussian2d", "conjugate_linear"), "gaussian2d"),
        "steps": (int, 100_000),
        "burn_in": (int, 5000),
        "step_size": (float, 5e-4),
        "chains": (int, 1),
        "leapfrog_steps": (int, 1000),
        "n_data": (int, 10),
        "noise_std": (float, 0.5),
        "mean_tol": (_optional(float), None),
        "se_mult": (float, 3.0),
        "var_tol": (float, 0.15),
    },
    "bandit": {
        "agent": (_choice("fsgld", "sgld", "greedy", "random", "oracle"), "fsgld"),
        "rounds": (int, 2000),
        "penalty_prob": (float, 0.5),
        "buffer_size": (int, 4096),
        "batch_size": (int, 64),
        "train_steps": (int, 64),
        "warmup": (int, 64),
        "step_size": (float, 1e-6),
        "decay": (float, 0.9),
        "decay_period": (int, 20000),
        "noise_std": (float, 1.0),
        "reward_scale": (float, 5.0),
        "init_scale": (float, 0.1),
        "m_measure": (int, 40),
        "m_inducing": (int, 40),
        "prior_lengthscale": (float, 2.0),
        "prior_jitter": (float, 1e-2),
        "prior_source": (_choice("dataset", "buffer"), "dataset"),
        "pretrain_points": (int, 1000),
    },
}

# experiment-specific defaults layered under the file
EXPERIMENT_DEFAULTS = {
    "uci": {
        "model.hidden": [10, 10],
        "likelihood.noise_std": 0.1,
        "prior.kernel.lengthscale": 1.0,
        "measurement.m_inducing": 0,
        "sampler.burn_in": 500,
        "sampler.num_samples": 15,
        "sampler.thin": 100,
    },
    "bandit": {
        "data.path": "mushroom.csv",
    },
}

# initial step size when sampler.step_size is left at auto
STEP_SIZE_DEFAULTS = {
    ("synthetic1d", "langevin"): 1e-4,
    ("synthetic1d", "hamiltonian"): 1e-3,
    ("uci", "langevin"): 1e-5,
    ("uci", "hamiltonian"): 1e-3,
}


class RunConfig(dict):
    """Nested ``{section: {key: value}}`` with dotted access helpers."""

    def get_value(self, dotted):
        section, key = dotted.split(".", 1)
        return self[section][key]

    def to_json(self):
        return json.dumps(self, indent=2, sort_keys=True)

    @property
    def kind(self):
        return self["experiment"]["kind"]

    @property
    def dynamics(self):
        return self["experiment"]["dynamics"]

    @property
    def seed(self):
        return self["experiment"]["seed"]


def _find_line(text, section, key=None):
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return lineno
        elif key is not None and current == section:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return lineno
    return None


def _where(path, text, section, key=None):
    line = _find_line(text, section, key) if text else None
    return f"{path}:{line}" if line else str(path)


def _parse_value(section, key, raw, origin):
    parser = SCHEMA[section][key][0]
    try:
        return parser(raw.strip())
    except ValueError as err:
        name = getattr(parser, "__name__", "value")
        raise ConfigError(f"{origin}: {section}.{key} = {raw!r} is not a valid {name} ({err})") from None


def _split_dotted(dotted, origin):
    if "." not in dotted:
        raise ConfigError(f"{origin}: expected section.key, got {dotted!r}")
    section, key = dotted.split(".", 1)
    if section not in SCHEMA:
        raise ConfigError(f"{origin}: unknown section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{origin}: unknown key {key!r} in [{section}]")
    return section, key


def load_config(path=None, overrides=(), seed=None, dynamics=None):
    """Read, validate and resolve a run configuration.

    Parameters
    ----------
    path : str, optional
        INI file; ``None`` starts from defaults.
    overrides : iterable of str
        ``section.key=value`` strings applied after the file.
    seed, dynamics : optional
        Shortcuts for ``experiment.seed`` / ``experiment.dynamics``.
    """
    raw = {}
    text = ""
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        cp = configparser.ConfigParser(interpolation=None, strict=True)
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as err:
            raise ConfigError(f"{path}: {err}") from None
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"{_where(path, text, section)}: unknown section [{section}]")
            for key, value in cp.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(
                        f"{_where(path, text, section, key)}: unknown key {key!r} in [{section}]"
                    )
                origin = _where(path, text, section, key)
                raw[(section, key)] = _parse_value(section, key, value, origin)

    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--override {item!r}: expected KEY=VALUE")
        dotted, value = item.split("=", 1)
        section, key = _split_dotted(dotted.strip(), f"--override {item!r}")
        raw[(section, key)] = _parse_value(section, key, value, f"--override {item!r}")
    if seed is not None:
        raw[("experiment", "seed")] = int(seed)
    if dynamics is not None:
        raw[("experiment", "dynamics")] = _parse_value("experiment", "dynamics", dynamics, "--dynamics")

    cfg = RunConfig({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})
    kind = raw.get(("experiment", "kind"), cfg["experiment"]["kind"])
    for dotted, value in EXPERIMENT_DEFAULTS.get(kind, {}).items():
        section, key = dotted.split(".", 1)
        cfg[section][key] = value
    for (section, key), value in raw.items():
        cfg[section][key] = value
    _resolve(cfg)
    _validate(cfg)
    return cfg


def _resolve(cfg):
    s = cfg["sampler"]
    if s["step_size"] is None:
        family = "hamiltonian" if cfg.dynamics.endswith("hmc") else "langevin"
        s["step_size"] = STEP_SIZE_DEFAULTS.get((cfg.kind, family), 1e-4)


def _validate(cfg):
    checks = [
        ("sampler.step_size", lambda v: v > 0, "must be positive"),
        ("sampler.decay", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        ("sampler.decay_period", lambda v: v >= 1, "must be >= 1"),
        ("sampler.burn_in", lambda v: v >= 0, "must be >= 0"),
        ("sampler.num_samples", lambda v: v >= 1, "must be >= 1"),
        ("sampler.thin", lambda v: v >= 1, "must be >= 1"),
        ("sampler.batch_size", lambda v: v >= 1, "must be >= 1"),
        ("sampler.leapfrog_steps", lambda v: v >= 1, "must be >= 1"),
        ("sampler.friction", lambda v: v > 0, "must be positive"),
        ("sampler.mass", lambda v: v > 0, "must be positive"),
        ("likelihood.noise_std", lambda v: v > 0, "must be positive"),
        ("param_prior.variance", lambda v: v > 0, "must be positive"),
        ("prior.pretrain.epochs", lambda v: v >= 0, "must be >= 0"),
        ("prior.jitter", lambda v: v >= 0, "must be >= 0"),
        ("data.test_fraction", lambda v: 0 < v < 1, "must lie in (0, 1)"),
        ("data.splits", lambda v: v >= 1, "must be >= 1"),
        ("data.n_points", lambda v: v >= 2 and v % 2 == 0, "must be even and >= 2"),
        ("measurement.m_inducing", lambda v: v >= 0, "must be >= 0"),
        ("evaluate.grid_points", lambda v: v >= 3, "must be >= 3"),
        ("bandit.rounds", lambda v: v >= 1, "must be >= 1"),
        ("bandit.penalty_prob", lambda v: v in (0.4, 0.5, 0.6), "must be 0.4, 0.5 or 0.6"),
    ]
    for dotted, ok, msg in checks:
        value = cfg.get_value(dotted)
        if not ok(value):
            raise ConfigError(f"{dotted} = {value!r} {msg}")
    if any(h < 1 for h in cfg["model"]["hidden"]):
        raise ConfigError("model.hidden widths must be >= 1")
    if cfg["measurement"]["low"] >= cfg["measurement"]["high"]:
        raise ConfigError("measurement.low must be < measurement.high")
