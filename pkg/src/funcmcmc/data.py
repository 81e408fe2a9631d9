"""Datasets: synthetic generator, CSV ingestion, scaling, splits, batching.

Standardisation uses the population convention (divide by ``n``), so a
column ``(0, 2)`` maps to ``(-1, 1)``.
"""

import csv
from dataclasses import dataclass, field, replace
import logging
import os
from pathlib import Path

import numpy as np

from .exceptions import DegenerateColumn, ParseError, PolicyError

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "FUNCMCMC_DATA_DIR"


@dataclass(frozen=True)
class Standardization:
    """Per-column moments used to z-score inputs and targets."""

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    def to_dict(self):
        return {k: np.asarray(v).tolist() for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    record: Standardization = None
    provenance: str = ""
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[0]


def synthetic_mean(x):
    """Noise-free regression function of the 1-D extrapolation task."""
    x = np.asarray(x, dtype=np.float64)
    return np.sin(3 * np.pi * x) + 0.3 * np.cos(9 * np.pi * x) + 0.5 * np.sin(7 * np.pi * x)


def synthetic_1d(n=20, seed=0, noise_std=0.5, noise=True):
    """Two clusters of inputs, ``U(-0.75, -0.25)`` and ``U(0.25, 0.75)``."""
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    half = n // 2
    x = np.concatenate([rng.uniform(-0.75, -0.25, half), rng.uniform(0.25, 0.75, half)])
    y = synthetic_mean(x)
    if noise:
        y = y + noise_std * rng.standard_normal(n)
    return Dataset(x[:, None], y[:, None], provenance=f"synthetic_1d(n={n}, seed={seed})")


def resolve_path(path):
    """Resolve relative dataset paths against ``$FUNCMCMC_DATA_DIR`` if set."""
    p = Path(path)
    if not p.is_absolute() and not p.exists():
        root = os.environ.get(DATA_DIR_ENV)
        if root and (Path(root) / p).exists():
            return Path(root) / p
    return p


def read_schema(path):
    """Parse a ``name,kind`` sidecar; returns a list of ``(name, kind)``."""
    cols = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2 or parts[1] not in ("feature", "target"):
                raise ParseError(f"{path}:{lineno}: expected 'name,feature|target'", row=lineno)
            cols.append((parts[0], parts[1]))
    return cols


def load_csv(path, target_columns=None, header=None, schema=None):
    """Read a numeric CSV into a :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
    target_columns : sequence of int or str, optional
        Columns holding targets; defaults to the last column, or the schema's
        ``target`` entries.
    header : bool, optional
        Whether the first row holds names. ``None`` sniffs it: a first row
        with any non-numeric cell is treated as a header.
    schema : str or Path, optional
        Sidecar path; ``<path>.schema`` is used automatically when present.

    Raises
    ------
    ParseError
        On missing or non-numeric cells, naming the 1-based row and column.
    FileNotFoundError
        If the file does not exist.
    """
    path = resolve_path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: file is empty")

    if header is None:
        header = not all(_is_number(c) for c in rows[0])
    names = [c.strip() for c in rows[0]] if header else [f"c{i}" for i in range(len(rows[0]))]
    body = rows[1:] if header else rows
    offset = 2 if header else 1

    schema_path = Path(schema) if schema else Path(str(path) + ".schema")
    kinds = None
    if schema_path.exists():
        spec = read_schema(schema_path)
        if len(spec) != len(names):
            raise ParseError(f"{schema_path}: {len(spec)} columns declared, file has {len(names)}")
        names = [s[0] for s in spec]
        kinds = [s[1] for s in spec]

    ncol = len(names)
    data = np.empty((len(body), ncol))
    for i, row in enumerate(body):
        if len(row) != ncol:
            raise ParseError(f"{path}: row {i + offset} has {len(row)} cells, expected {ncol}",
                             row=i + offset)
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell in ("?", "NA", "nan"):
                raise ParseError(f"{path}: missing value at row {i + offset}, column {j + 1}",
                                 row=i + offset, col=j + 1)
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric cell {cell!r} at row {i + offset}, column {j + 1}",
                    row=i + offset, col=j + 1,
                ) from None

    if target_columns is None:
        tcols = [j for j, k in enumerate(kinds) if k == "target"] if kinds else [ncol - 1]
    else:
        tcols = [names.index(c) if isinstance(c, str) else int(c) % ncol for c in target_columns]
    fcols = [j for j in range(ncol) if j not in tcols]
    return Dataset(
        data[:, fcols], data[:, tcols], provenance=str(path),
        feature_names=tuple(names[j] for j in fcols),
    )


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def standardize(ds, record=None):
    """Z-score inputs and targets.

    With ``record=None`` the moments come from ``ds`` itself; pass the
    training record to transform a test set without leaking its statistics.
    Zero-variance input columns are dropped (with a warning) when fitting a
    fresh record; a zero-variance target raises :class:`DegenerateColumn`.
    """
    X, y = ds.X, ds.y
    names = ds.feature_names
    if record is None:
        x_std = X.std(axis=0)
        keep = x_std > 0
        if not np.all(keep):
            logger.warning("dropping %d constant input column(s)", int(np.sum(~keep)))
            X = X[:, keep]
            names = tuple(n for n, k in zip(names, keep) if k) if names else names
        y_std = y.std(axis=0)
        if np.any(y_std == 0):
            raise DegenerateColumn("target column has zero variance")
        record = Standardization(X.mean(axis=0), X.std(axis=0), y.mean(axis=0), y_std)
    elif X.shape[1] != record.x_mean.shape[0]:
        raise DegenerateColumn("input columns do not match the standardisation record")
    return Dataset(
        (X - record.x_mean) / record.x_std,
        (y - record.y_mean) / record.y_std,
        record=record,
        provenance=ds.provenance,
        feature_names=names,
    )


def destandardize_predictions(record, mean, std=None):
    """Map predictive mean (and std) from the standardised target scale back."""
    mean = np.asarray(mean, dtype=np.float64) * record.y_std.ravel()[0] + record.y_mean.ravel()[0]
    if std is None:
        return mean
    return mean, np.asarray(std, dtype=np.float64) * record.y_std.ravel()[0]


def split(ds, test_fraction=0.1, seed=0, scale=True):
    """Seeded shuffle split; the test set is scaled with training moments.

    Returns ``(train, test)``. The test set size is ``round(n * test_fraction)``
    (at least one row).
    """
    train_idx, test_idx = split_indices(len(ds), test_fraction, seed)
    train = replace(ds, X=ds.X[train_idx], y=ds.y[train_idx])
    test = replace(ds, X=ds.X[test_idx], y=ds.y[test_idx])
    if scale:
        train = standardize(train)
        if train.X.shape[1] != test.X.shape[1]:
            keep = ds.X[train_idx].std(axis=0) > 0
            test = replace(test, X=test.X[:, keep])
        test = standardize(test, record=train.record)
    return train, test


def split_indices(n, test_fraction=0.1, seed=0):
    """The ``(train_idx, test_idx)`` that :func:`split` would use."""
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


@dataclass(frozen=True)
class MeasurementPolicy:
    """How to pick measurement points each iteration.

    ``m_train`` rows are drawn without replacement from the training inputs,
    ``m_inducing`` points uniformly from the box ``[low, high]^p``.
    """

    m_train: int = 40
    m_inducing: int = 40
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if self.m_train < 0 or self.m_inducing < 0:
            raise PolicyError("measurement counts must be non-negative")
        if self.m_train + self.m_inducing < 1:
            raise PolicyError("need at least one measurement point")
        if not self.low < self.high:
            raise PolicyError("box bounds must satisfy low < high")

    @classmethod
    def for_training_set(cls, n, cap=1000):
        """All training points when ``n <= cap``, else ``cap`` random ones."""
        return cls(m_train=min(n, cap), m_inducing=0)


def draw_measurement_set(policy, X_train, rng):
    """Training subset plus box samples, stacked as an ``(M, p)`` array.

    When ``m_train`` equals the number of training rows the full training
    set is used in its stored order; this keeps the set identical between
    iterations so the prior factorisation can be reused.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    if X_train.ndim == 1:
        X_train = X_train[:, None]
    n, p = X_train.shape
    if policy.m_train > n:
        raise PolicyError(f"m_train={policy.m_train} exceeds the {n} training rows")
    parts = []
    if policy.m_train == n:
        parts.append(X_train)
    elif policy.m_train > 0:
        parts.append(X_train[rng.choice(n, size=policy.m_train, replace=False)])
    if policy.m_inducing > 0:
        parts.append(rng.uniform(policy.low, policy.high, size=(policy.m_inducing, p)))
    return np.concatenate(parts, axis=0)


def minibatches(X, y, batch_size, rng):
    """One epoch of shuffled minibatches; the last batch may be smaller."""
    n = X.shape[0]
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        idx = perm[start:start + batch_size]
        yield X[idx], y[idx]
