import math

import numpy as np
import pytest
from scipy.stats import norm

from funcmcmc.energy import GaussianLikelihood
from funcmcmc.evaluate import (
    PredictiveSummary, export_bands, mean_abs_second_difference, nll, predictive_ensemble,
    read_bands, region_mask, rmse,
)
from funcmcmc.exceptions import DimensionMismatch, EmptySampleSet
from funcmcmc.linalg import make_rng
from funcmcmc.mlp import MLPArchitecture


def test_mixture_density_matches_scipy():
    F = np.array([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
    s = PredictiveSummary(F, 0.7)
    y = np.array([0.3, 0.1])
    ref = np.log(np.mean(norm.pdf(y[None, :], loc=F, scale=0.7), axis=0))
    np.testing.assert_allclose(s.log_predictive_density(y), ref, rtol=1e-12)
    assert nll(s, y) == pytest.approx(-ref.mean())


def test_std_decomposition():
    F = make_rng(0).standard_normal((50, 4))
    s = PredictiveSummary(F, 0.3)
    np.testing.assert_allclose(s.std_total ** 2, s.std_param ** 2 + 0.09)


def test_single_sample_has_zero_param_std():
    model = MLPArchitecture((1, 3, 1))
    w = make_rng(1).standard_normal((1, model.n_params))
    s = predictive_ensemble(model, w, np.linspace(-1, 1, 5)[:, None], GaussianLikelihood(0.2))
    assert np.all(s.std_param == 0)
    np.testing.assert_allclose(s.std_total, 0.2)


def test_empty_sample_set():
    with pytest.raises(EmptySampleSet):
        predictive_ensemble(MLPArchitecture((1, 1)), np.zeros((0, 2)), np.zeros((2, 1)),
                            GaussianLikelihood())


def test_rmse_examples():
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))
    with pytest.raises(DimensionMismatch):
        rmse([0.0], [1.0, 2.0])


def test_regions_and_curvature():
    x = np.linspace(-1, 1, 9)
    assert region_mask(x, -1, -0.75).sum() == 2
    assert mean_abs_second_difference(3 * x + 1) == pytest.approx(0.0, abs=1e-12)
    assert mean_abs_second_difference(x ** 2) == pytest.approx(2 * 0.25 ** 2)


def test_band_roundtrip(tmp_path):
    F = make_rng(2).standard_normal((10, 5))
    s = PredictiveSummary(F, 0.1)
    grid = np.linspace(-1, 1, 5)
    path = tmp_path / "bands.csv"
    export_bands(s, grid, path, header={"seed": 3})
    assert path.read_text().startswith("# seed: 3\n")
    back = read_bands(path)
    np.testing.assert_array_equal(back["mean"], s.mean)
    np.testing.assert_array_equal(back["std_total"], s.std_total)
    np.testing.assert_array_equal(back["x"], grid)
