import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from funcmcmc.exceptions import DimensionMismatch
from funcmcmc.linalg import make_rng
from funcmcmc.mlp import ConstantModel, MLPArchitecture


def _fd(fun, w, h=1e-6):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (fun(w + e) - fun(w - e)) / (2 * h)
    return g


def test_param_count():
    assert MLPArchitecture((1, 100, 100, 1)).n_params == 100 + 100 + 100 * 100 + 100 + 100 + 1
    assert MLPArchitecture((13, 10, 10, 1)).n_params == 13 * 10 + 10 + 10 * 10 + 10 + 10 + 1


def test_forward_matches_manual():
    model = MLPArchitecture((2, 3, 1), "tanh")
    rng = make_rng(0)
    w = rng.standard_normal(model.n_params)
    W1 = w[:6].reshape(2, 3)
    b1 = w[6:9]
    W2 = w[9:12].reshape(3, 1)
    b2 = w[12:13]
    X = rng.standard_normal((4, 2))
    np.testing.assert_allclose(model.forward(w, X), np.tanh(X @ W1 + b1) @ W2 + b2, rtol=1e-14)


@pytest.mark.parametrize("widths,act", [((1, 5, 1), "tanh"), ((3, 4, 4, 2), "tanh"),
                                        ((2, 6, 1), "relu"), ((3, 2), "identity")])
def test_vjp_finite_differences(widths, act):
    model = MLPArchitecture(widths, act)
    rng = make_rng(1)
    for _ in range(5):
        w = rng.normal(0, 0.8, model.n_params)
        X = rng.uniform(-1, 1, (7, widths[0]))
        cot = rng.standard_normal((7, widths[-1]))
        g = model.vjp(w, X, cot)
        fd = _fd(lambda v: float(np.sum(cot * model.forward(v, X))), w)
        assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(fd)


def test_vjp_batch_additivity():
    model = MLPArchitecture((2, 5, 1))
    rng = make_rng(2)
    w = rng.standard_normal(model.n_params)
    A, B = rng.standard_normal((4, 2)), rng.standard_normal((3, 2))
    ca, cb = rng.standard_normal((4, 1)), rng.standard_normal((3, 1))
    joint = model.vjp(w, np.vstack([A, B]), np.vstack([ca, cb]))
    np.testing.assert_allclose(joint, model.vjp(w, A, ca) + model.vjp(w, B, cb), atol=1e-12)


def test_forward_and_vjp_agrees_with_vjp():
    model = MLPArchitecture((2, 4, 1))
    rng = make_rng(3)
    w, X = rng.standard_normal(model.n_params), rng.standard_normal((5, 2))
    out, g = model.forward_and_vjp(w, X, lambda f: 2 * f)
    np.testing.assert_allclose(out, model.forward(w, X))
    np.testing.assert_allclose(g, model.vjp(w, X, 2 * out), rtol=1e-13)


def test_zero_cotangent_gives_zero():
    model = MLPArchitecture((2, 4, 1))
    w = make_rng(4).standard_normal(model.n_params)
    assert np.all(model.vjp(w, np.ones((3, 2)), np.zeros((3, 1))) == 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=4), st.integers(0, 2**31))
def test_flatten_roundtrip(widths, seed):
    model = MLPArchitecture(tuple(widths))
    w = make_rng(seed).standard_normal(model.n_params)
    assert np.array_equal(model.flatten(model.unflatten(w)), w)


def test_shape_errors():
    model = MLPArchitecture((2, 3, 1))
    w = np.zeros(model.n_params)
    with pytest.raises(DimensionMismatch):
        model.forward(w, np.ones((4, 3)))
    with pytest.raises(DimensionMismatch):
        model.vjp(w, np.ones((4, 2)), np.ones((3, 1)))
    with pytest.raises(DimensionMismatch):
        model.unflatten(np.zeros(model.n_params + 1))


def test_bad_activation():
    with pytest.raises(ValueError):
        MLPArchitecture((1, 2, 1), "sigmoid")


def test_constant_model():
    m = ConstantModel()
    X = np.zeros((4, 1))
    assert np.all(m.forward(np.array([1.5]), X) == 1.5)
    np.testing.assert_allclose(m.vjp(np.array([1.5]), X, np.arange(4.0)), [6.0])
