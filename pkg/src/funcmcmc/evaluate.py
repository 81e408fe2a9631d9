"""Posterior-predictive summaries, regression metrics and band export."""

import csv
from dataclasses import dataclass
import json
import math

import numpy as np
from scipy.special import logsumexp

from .exceptions import DimensionMismatch, EmptySampleSet

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PredictiveSummary:
    """Ensemble predictions at a set of inputs.

    Attributes
    ----------
    f_samples : ndarray, shape (S, n)
        Network output of every retained sample at every input.
    noise_std : float
        Observation noise of the likelihood.
    """

    f_samples: np.ndarray
    noise_std: float

    @property
    def mean(self):
        return self.f_samples.mean(axis=0)

    @property
    def std_param(self):
        return self.f_samples.std(axis=0)

    @property
    def std_total(self):
        return np.sqrt(self.f_samples.var(axis=0) + self.noise_std**2)

    def log_predictive_density(self, y):
        """Per-point ``log (1/S) sum_j N(y | f_j, sigma^2)``."""
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != self.f_samples.shape[1]:
            raise DimensionMismatch(
                f"{y.shape[0]} targets for {self.f_samples.shape[1]} predictions"
            )
        s2 = self.noise_std**2
        comp = -0.5 * (y[None, :] - self.f_samples) ** 2 / s2 - 0.5 * (_LOG_2PI + math.log(s2))
        return logsumexp(comp, axis=0) - math.log(self.f_samples.shape[0])


def predictive_ensemble(model, samples, X, lik):
    """Evaluate every sample on ``X``; single-output models only.

    ``samples`` is a :class:`~funcmcmc.samplers.SampleSet` or an ``(S, k)``
    array.
    """
    W = getattr(samples, "samples", samples)
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] == 0:
        raise EmptySampleSet("need at least one parameter sample")
    F = np.stack([model.forward(w, X)[:, 0] for w in W])
    return PredictiveSummary(F, float(lik.noise_std))


def rmse(mean, y):
    mean = np.asarray(mean, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if mean.shape != y.shape:
        raise DimensionMismatch(f"predictions {mean.shape} and targets {y.shape} differ")
    return float(np.sqrt(np.mean((mean - y) ** 2)))


def nll(summary, y):
    """Mean negative mixture log predictive density."""
    return float(-np.mean(summary.log_predictive_density(y)))


def region_mask(x, low, high):
    x = np.asarray(x, dtype=np.float64).ravel()
    return (x >= low) & (x <= high)


def mean_abs_second_difference(values):
    """Average ``|v[i+1] - 2 v[i] + v[i-1]|`` over a uniform grid."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 3:
        raise ValueError("need at least three values")
    return float(np.mean(np.abs(np.diff(v, 2))))


BAND_COLUMNS = ("x", "mean", "std_param", "std_total")


def export_bands(summary, grid, path, header=None):
    """Write predictive bands as CSV (``x, mean, std_param, std_total``).

    ``header`` is an optional dict written as ``# key: json`` comment lines
    before the column row.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim == 2:
        if grid.shape[1] != 1:
            raise DimensionMismatch("bands are exported for 1-D inputs only")
        grid = grid[:, 0]
    if grid.shape[0] != summary.f_samples.shape[1]:
        raise DimensionMismatch("grid and summary have different lengths")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BAND_COLUMNS)
        for row in zip(grid, summary.mean, summary.std_param, summary.std_total):
            w.writerow([repr(float(v)) for v in row])


def read_bands(path):
    """Parse a band CSV back into a dict of column arrays."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    cols = rows[0]
    data = np.array([[float(c) for c in r] for r in rows[1:]]).reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}
