"""Mushroom contextual bandit with Thompson-sampling agents.

Each round a mushroom is drawn uniformly; the agent sees its one-hot
features and either eats it or rejects it. Eating an edible mushroom pays 5;
eating a poisonous one pays -35 with probability ``p`` and 5 otherwise;
rejecting pays 0. The oracle eats exactly the edible ones.

Network inputs are the context followed by a one-hot action
(``[context, eat, reject]``); the output is the predicted reward.
"""

import csv
from dataclasses import dataclass, field, replace
import json
import logging

import numpy as np
from sklearn.preprocessing import OneHotEncoder

from .data import resolve_path
from .energy import GaussianLikelihood, ParamPrior, functional_drift, param_drift
from .exceptions import ConfigError, ParseError
from .gp import GPPrior, Kernel, kernel_matrix, pretrain
from .linalg import make_rng
from .mlp import MLPArchitecture
from .samplers import StepSchedule, sgld_step, step_size

logger = logging.getLogger(__name__)

EAT, REJECT = 0, 1
ACTIONS = ("eat", "reject")
PENALTY_PROBS = (0.4, 0.5, 0.6)
EDIBLE_REWARD = 5.0
POISON_PENALTY = -35.0
AGENTS = ("fsgld", "sgld", "greedy", "random", "oracle")


def load_mushroom(path, label_column="class", edible_label="e"):
    """Read the categorical mushroom table and one-hot encode it.

    Returns ``(contexts, edible, encoding)`` where ``encoding`` maps each
    feature name to its ordered category list; column ``j`` of a feature's
    block is 1 when the raw value equals ``categories[j]``.
    """
    path = resolve_path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header, body = rows[0], rows[1:]
    if label_column not in header:
        raise ParseError(f"{path}: no column named {label_column!r}")
    li = header.index(label_column)
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise ParseError(f"{path}: row {i + 2} has {len(r)} cells, expected {len(header)}",
                             row=i + 2)
        for j, cell in enumerate(r):
            if cell.strip() in ("", "?"):
                raise ParseError(f"{path}: missing value at row {i + 2}, column {j + 1}",
                                 row=i + 2, col=j + 1)
    feats = [j for j in range(len(header)) if j != li]
    raw = np.array([[r[j].strip() for j in feats] for r in body])
    enc = OneHotEncoder(sparse_output=False, dtype=np.float64)
    contexts = enc.fit_transform(raw)
    edible = np.array([r[li].strip() == edible_label for r in body])
    encoding = {header[j]: [str(c) for c in cats] for j, cats in zip(feats, enc.categories_)}
    return contexts, edible, encoding


def encode_action(contexts, action):
    """Append the one-hot action to one or many contexts."""
    contexts = np.atleast_2d(np.asarray(contexts, dtype=np.float64))
    onehot = np.zeros((contexts.shape[0], len(ACTIONS)))
    onehot[:, action] = 1.0
    return np.concatenate([contexts, onehot], axis=1)


def decode_action(inputs):
    """Split encoded inputs back into ``(contexts, actions)``."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    k = len(ACTIONS)
    return inputs[:, :-k], np.argmax(inputs[:, -k:], axis=1)


@dataclass
class MushroomEnv:
    """Bandit environment over a fixed table of mushrooms."""

    contexts: np.ndarray
    edible: np.ndarray
    penalty_prob: float = 0.5

    def __post_init__(self):
        if not any(np.isclose(self.penalty_prob, p) for p in PENALTY_PROBS):
            raise ConfigError(f"penalty_prob must be one of {PENALTY_PROBS}")
        if self.contexts.shape[0] != self.edible.shape[0]:
            raise ValueError("contexts and labels differ in length")

    @property
    def n_instances(self):
        return self.contexts.shape[0]

    @property
    def context_dim(self):
        return self.contexts.shape[1]

    def draw(self, rng):
        return int(rng.integers(self.n_instances))

    def oracle_action(self, i):
        return EAT if self.edible[i] else REJECT


def reward(env, i, action, rng):
    """Realised reward; one uniform draw is consumed whatever the action."""
    u = rng.random()
    if action == REJECT:
        return 0.0
    if env.edible[i]:
        return EDIBLE_REWARD
    return POISON_PENALTY if u < env.penalty_prob else EDIBLE_REWARD


class ReplayBuffer:
    """Fixed-capacity FIFO store of ``(input, reward)`` pairs."""

    def __init__(self, dim, capacity=4096):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._X = np.zeros((capacity, dim))
        self._r = np.zeros(capacity)
        self._next = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, x, r):
        self._X[self._next] = x
        self._r[self._next] = r
        self._next = (self._next + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def contents(self):
        """All stored pairs, oldest first."""
        if self.size < self.capacity:
            idx = np.arange(self.size)
        else:
            idx = (np.arange(self.capacity) + self._next) % self.capacity
        return self._X[idx], self._r[idx]

    def sample_inputs(self, n, rng):
        idx = rng.choice(self.size, size=min(n, self.size), replace=False)
        return self._X[idx]

    def sample(self, n, rng):
        idx = rng.choice(self.size, size=min(n, self.size), replace=False)
        return self._X[idx], self._r[idx][:, None]


@dataclass(frozen=True)
class BanditConfig:
    """Agent and training settings.

    ``train_steps`` sampler updates on minibatches of ``batch_size`` follow
    every round once ``warmup`` rounds of uniformly random actions have
    filled the buffer. Rewards are divided by ``reward_scale`` before they
    reach the network. The functional agent measures its prior on
    ``m_measure`` buffered inputs plus ``m_inducing`` unlabelled contexts
    from the environment table paired with random actions. Its GP prior is
    pre-trained on ``pretrain_points`` random (context, action, reward)
    tuples drawn from the table before the first round
    (``prior_source="dataset"``), or on the buffer once warm-up ends
    (``"buffer"``).
    """

    hidden: tuple = (100, 100)
    buffer_size: int = 4096
    batch_size: int = 64
    train_steps: int = 64
    warmup: int = 64
    schedule: StepSchedule = field(default_factory=lambda: StepSchedule(1e-6, 0.9, 20000))
    noise_std: float = 1.0
    reward_scale: float = 5.0
    prior_variance: float = 1.0
    init_scale: float = 0.1
    m_measure: int = 40
    m_inducing: int = 40
    pretrain_points: int = 1000
    pretrain_epochs: int = 100
    prior_lengthscale: float = 2.0
    prior_jitter: float = 1e-2
    prior_source: str = "dataset"

    def __post_init__(self):
        if self.prior_source not in ("dataset", "buffer"):
            raise ConfigError("prior_source must be 'dataset' or 'buffer'")


class RandomAgent:
    name = "random"

    def act(self, env, i, rng):
        return int(rng.integers(len(ACTIONS)))

    def observe(self, x, r, rng):
        pass


class OracleAgent:
    name = "oracle"

    def act(self, env, i, rng):
        return env.oracle_action(i)

    def observe(self, x, r, rng):
        pass


class SamplerAgent:
    """Acts greedily w.r.t. the current chain state.

    ``kind="sgld"``/``"fsgld"`` makes this Thompson sampling (the chain state
    is the posterior draw); ``kind="greedy"`` runs the same updates without
    injected noise, i.e. MAP gradient ascent.
    """

    def __init__(self, kind, context_dim, config, rng, contexts=None):
        if kind not in ("fsgld", "sgld", "greedy"):
            raise ConfigError(f"unknown sampler agent {kind!r}")
        self.name = kind
        self.cfg = config
        self.model = MLPArchitecture((context_dim + len(ACTIONS),) + tuple(config.hidden) + (1,))
        self.w = self.model.init_params(rng, config.init_scale)
        self.buffer = ReplayBuffer(self.model.input_dim, config.buffer_size)
        self.lik = GaussianLikelihood(config.noise_std)
        self.param_prior = ParamPrior(config.prior_variance)
        self.gp = None
        self.contexts = contexts
        self.t = 0
        self.rounds = 0

    def predict(self, contexts):
        """Predicted reward of every action, shape ``(n, n_actions)``."""
        contexts = np.atleast_2d(contexts)
        cols = [self.model.forward(self.w, encode_action(contexts, a))[:, 0] for a in range(len(ACTIONS))]
        return np.stack(cols, axis=1) * self.cfg.reward_scale

    def act(self, env, i, rng):
        if self.rounds < self.cfg.warmup:
            return int(rng.integers(len(ACTIONS)))
        return int(np.argmax(self.predict(env.contexts[i])[0]))

    def fit_prior(self, X, r):
        """Pre-train the GP prior on inputs ``X`` and scaled rewards ``r``."""
        init = GPPrior(Kernel("rbf", self.cfg.prior_lengthscale, 1.0), mean_kind="constant",
                       noise_variance=0.25)
        gp = pretrain(init, X, r, epochs=self.cfg.pretrain_epochs)
        diag = float(np.mean(np.diag(kernel_matrix(gp.kernel, X[:1]))))
        self.gp = replace(gp, jitter=self.cfg.prior_jitter * diag)

    def _measurement_set(self, rng):
        parts = [self.buffer.sample_inputs(self.cfg.m_measure, rng)]
        if self.cfg.m_inducing > 0 and self.contexts is not None:
            idx = rng.integers(self.contexts.shape[0], size=self.cfg.m_inducing)
            acts = rng.integers(len(ACTIONS), size=self.cfg.m_inducing)
            onehot = np.eye(len(ACTIONS))[acts]
            parts.append(np.concatenate([self.contexts[idx], onehot], axis=1))
        return np.concatenate(parts, axis=0)

    def observe(self, x, r, rng):
        self.buffer.add(x, r / self.cfg.reward_scale)
        self.rounds += 1
        if self.rounds < self.cfg.warmup:
            return
        if self.name == "fsgld" and self.gp is None:
            X, r = self.buffer.contents()
            if X.shape[0] > self.cfg.pretrain_points:
                idx = np.sort(rng.choice(X.shape[0], self.cfg.pretrain_points, replace=False))
                X, r = X[idx], r[idx]
            self.fit_prior(X, r)
        N = len(self.buffer)
        for _ in range(self.cfg.train_steps):
            eps = step_size(self.cfg.schedule, self.t)
            X_b, y_b = self.buffer.sample(self.cfg.batch_size, rng)
            if self.name == "fsgld":
                drift = functional_drift(self.model, self.w, X_b, y_b, N,
                                         self._measurement_set(rng), self.gp, self.lik)
            else:
                drift = param_drift(self.model, self.w, X_b, y_b, N, self.param_prior, self.lik)
            self.w = sgld_step(self.w, drift, eps, rng, noise=self.name != "greedy")
            self.t += 1


def prior_training_set(env, n, rng, reward_scale=1.0):
    """``n`` random instances with random actions and realised rewards."""
    idx = rng.integers(env.n_instances, size=n)
    acts = rng.integers(len(ACTIONS), size=n)
    X = np.concatenate([env.contexts[idx], np.eye(len(ACTIONS))[acts]], axis=1)
    r = np.array([reward(env, i, a, rng) for i, a in zip(idx, acts)])
    return X, r / reward_scale


def make_agent(kind, env, config, rng, prior_rng=None):
    """Build an agent; ``prior_rng`` drives the dataset pre-training draw."""
    if kind == "random":
        return RandomAgent()
    if kind == "oracle":
        return OracleAgent()
    agent = SamplerAgent(kind, env.context_dim, config, rng, contexts=env.contexts)
    if kind == "fsgld" and config.prior_source == "dataset":
        X, r = prior_training_set(env, config.pretrain_points, prior_rng or rng, config.reward_scale)
        agent.fit_prior(X, r)
    return agent


def thompson_round(agent, env, rng, reward_rng=None, env_rng=None):
    """Play one round; returns ``(instance, action, reward, regret)``.

    Regret is the oracle's reward on the same instance and the same reward
    draw minus the agent's. ``env_rng`` and ``reward_rng`` default to ``rng``.
    """
    reward_rng = rng if reward_rng is None else reward_rng
    env_rng = rng if env_rng is None else env_rng
    i = env.draw(env_rng)
    action = agent.act(env, i, rng)
    r = reward(env, i, action, reward_rng)
    best = EDIBLE_REWARD if env.edible[i] else 0.0
    agent.observe(encode_action(env.contexts[i], action)[0], r, rng)
    return i, action, r, best - r


def cumulative_regret(regrets):
    return np.cumsum(np.asarray(regrets, dtype=np.float64))


def run_bandit(kind, env, rounds, seed=0, config=None):
    """Run one agent for ``rounds`` rounds.

    Instance draws and reward coins come from streams that do not depend on
    the agent, so different agents face identical sequences for a seed.
    Returns a dict of per-round arrays.
    """
    config = config or BanditConfig()
    env_ss, coin_ss, agent_ss, prior_ss = np.random.SeedSequence(seed).spawn(4)
    env_rng, coin_rng, agent_rng = make_rng(env_ss), make_rng(coin_ss), make_rng(agent_ss)
    agent = make_agent(kind, env, config, agent_rng, prior_rng=make_rng(prior_ss))
    out = {"round": [], "instance": [], "action": [], "reward": [], "regret": []}
    for t in range(rounds):
        i, action, r, regret = thompson_round(agent, env, agent_rng, coin_rng, env_rng)
        for key, val in (("round", t), ("instance", i), ("action", action),
                         ("reward", r), ("regret", regret)):
            out[key].append(val)
    out = {k: np.asarray(v) for k, v in out.items()}
    out["cumulative_regret"] = cumulative_regret(out["regret"])
    return out


def write_regret_csv(trace, path, header=None):
    """Columns ``round, action, reward, cumulative_regret``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "action", "reward", "cumulative_regret"])
        for t, a, r, c in zip(trace["round"], trace["action"], trace["reward"],
                              trace["cumulative_regret"]):
            w.writerow([int(t), ACTIONS[int(a)], repr(float(r)), repr(float(c))])
