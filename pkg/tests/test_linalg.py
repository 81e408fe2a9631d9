import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from funcmcmc.exceptions import DimensionMismatch, NotPositiveDefinite
from funcmcmc.linalg import cholesky, gaussian_vector, make_rng, solve_spd, spawn_seeds


def test_cholesky_matches_numpy():
    A = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = cholesky(A)
    np.testing.assert_allclose(L, np.linalg.cholesky(A), rtol=1e-14)
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-14)


def test_rank_deficient_gets_jitter():
    A = np.ones((3, 3))
    L, j = cholesky(A, return_jitter=True)
    assert 0 < j <= 1e-2 * np.mean(np.diag(A))
    np.testing.assert_allclose(L @ L.T, A + j * np.eye(3), atol=1e-12)


def test_negative_definite_raises():
    with pytest.raises(NotPositiveDefinite):
        cholesky(-np.eye(3))


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_nonsquare_rejected():
    with pytest.raises(DimensionMismatch):
        cholesky(np.ones((2, 3)))


def test_solve_spd_against_inverse():
    rng = make_rng(0)
    B = rng.standard_normal((5, 5))
    A = B @ B.T + 5 * np.eye(5)
    b = rng.standard_normal((5, 2))
    x = solve_spd(cholesky(A), b)
    np.testing.assert_allclose(x, np.linalg.inv(A) @ b, rtol=1e-10)


def test_solve_spd_shape_check():
    with pytest.raises(DimensionMismatch):
        solve_spd(np.eye(3), np.ones(4))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-3, 3)))
def test_factor_reconstructs(B):
    A = B @ B.T + 0.5 * np.eye(4)
    L, j = cholesky(A, return_jitter=True)
    assert np.allclose(np.triu(L, 1), 0.0)
    np.testing.assert_allclose(L @ L.T, A + j * np.eye(4), rtol=1e-10, atol=1e-10)


def test_rng_streams_reproducible():
    a = gaussian_vector(make_rng(5), 10)
    b = gaussian_vector(make_rng(5), 10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gaussian_vector(make_rng(6), 10))


def test_spawned_seeds_distinct_and_stable():
    s = spawn_seeds(0, 4)
    assert len(set(s)) == 4
    assert s == spawn_seeds(0, 4)


def test_gaussian_vector_rejects_empty():
    with pytest.raises(DimensionMismatch):
        gaussian_vector(make_rng(0), 0)
