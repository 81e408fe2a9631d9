import numpy as np
import pytest

from funcmcmc.bandit import (
    EAT, EDIBLE_REWARD, POISON_PENALTY, REJECT, BanditConfig, MushroomEnv, ReplayBuffer,
    cumulative_regret, decode_action, encode_action, load_mushroom, reward, run_bandit,
)
from funcmcmc.exceptions import ConfigError
from funcmcmc.linalg import make_rng


def _env(p=0.5, n=40):
    rng = make_rng(0)
    contexts = np.eye(4)[rng.integers(4, size=n)]
    return MushroomEnv(contexts, rng.random(n) < 0.5, p)


def test_reward_table():
    env = _env()
    e, p = int(np.flatnonzero(env.edible)[0]), int(np.flatnonzero(~env.edible)[0])
    rng = make_rng(0)
    assert reward(env, e, EAT, rng) == EDIBLE_REWARD
    assert reward(env, p, REJECT, rng) == 0.0
    assert reward(env, e, REJECT, rng) == 0.0
    assert {reward(env, p, EAT, rng) for _ in range(200)} == {EDIBLE_REWARD, POISON_PENALTY}


@pytest.mark.parametrize("prob", [0.4, 0.5, 0.6])
def test_poisonous_mean(prob):
    env = _env(prob)
    p = int(np.flatnonzero(~env.edible)[0])
    rng = make_rng(1)
    mean = np.mean([reward(env, p, EAT, rng) for _ in range(100_000)])
    assert mean == pytest.approx(5 - 40 * prob, abs=0.5)


def test_penalty_prob_validated():
    with pytest.raises(ConfigError):
        _env(0.3)


def test_oracle_has_zero_regret():
    trace = run_bandit("oracle", _env(), 300, seed=2)
    assert np.all(trace["regret"] == 0)


def test_random_agent_expected_regret():
    env = _env(n=400)
    rounds = 20_000
    trace = run_bandit("random", env, rounds, seed=3)
    frac_edible = env.edible[trace["instance"]].mean()
    expected = 2.5 * frac_edible + 7.5 * (1 - frac_edible)
    assert trace["regret"].mean() == pytest.approx(expected, abs=0.35)


def test_same_seed_same_stream_across_agents():
    env = _env()
    a = run_bandit("random", env, 100, seed=5)
    b = run_bandit("oracle", env, 100, seed=5)
    assert np.array_equal(a["instance"], b["instance"])
    assert np.array_equal(run_bandit("random", env, 100, seed=5)["action"], a["action"])


def test_cumulative_regret():
    np.testing.assert_array_equal(cumulative_regret([0, 5, -5, 15]), [0, 5, 0, 15])
    assert cumulative_regret([]).shape == (0,)


def test_buffer_fifo():
    buf = ReplayBuffer(2, capacity=3)
    for k in range(5):
        buf.add([k, -k], float(k))
    X, r = buf.contents()
    assert len(buf) == 3
    np.testing.assert_array_equal(r, [2.0, 3.0, 4.0])
    np.testing.assert_array_equal(X[:, 0], [2, 3, 4])
    Xs, rs = buf.sample(10, make_rng(0))
    assert Xs.shape == (3, 2) and rs.shape == (3, 1)
    with pytest.raises(ValueError):
        ReplayBuffer(2, capacity=0)


def test_encode_decode_roundtrip():
    ctx = make_rng(0).random((5, 3))
    for a in (EAT, REJECT):
        c, acts = decode_action(encode_action(ctx, a))
        np.testing.assert_array_equal(c, ctx)
        assert np.all(acts == a)


def test_load_mushroom(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("class,cap,odor\ne,x,a\np,b,n\ne,x,n\n")
    contexts, edible, enc = load_mushroom(p)
    assert contexts.shape == (3, 4)
    np.testing.assert_array_equal(edible, [True, False, True])
    assert enc == {"cap": ["b", "x"], "odor": ["a", "n"]}
    np.testing.assert_array_equal(contexts.sum(axis=1), 2)


@pytest.mark.parametrize("kind", ["greedy", "fsgld"])
def test_sampler_agents_deterministic(kind):
    cfg = BanditConfig(hidden=(8,), warmup=8, train_steps=2, batch_size=8, m_measure=4,
                       m_inducing=4, pretrain_points=40, pretrain_epochs=5)
    env = _env()
    a = run_bandit(kind, env, 20, seed=1, config=cfg)
    b = run_bandit(kind, env, 20, seed=1, config=cfg)
    assert np.array_equal(a["action"], b["action"])
    assert np.array_equal(a["cumulative_regret"], b["cumulative_regret"])


def test_prior_source_validated():
    with pytest.raises(ConfigError):
        BanditConfig(prior_source="elsewhere")
