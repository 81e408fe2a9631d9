"""On-disk formats for sample sets, traces and run metadata.

``samples.bin`` layout::

    FUNCMCMC-SAMPLES 1\\n
    <header: one line of JSON>\\n
    <K * k little-endian float64 values, one sample after another>

The header records the dynamics, seed, ``k`` (parameters per sample), ``K``
(number of samples), the architecture and the resolved run config. Wall-clock
time is deliberately left out so that reruns are byte-identical.
"""

import csv
import json

import numpy as np

from .exceptions import SchemaMismatch

MAGIC = b"FUNCMCMC-SAMPLES 1\n"


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_samples(path, samples, header):
    samples = np.ascontiguousarray(samples, dtype="<f8")
    if samples.ndim != 2:
        raise ValueError("samples must be a 2-D array")
    head = dict(header)
    head["K"], head["k"] = int(samples.shape[0]), int(samples.shape[1])
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_dumps(head).encode("utf-8") + b"\n")
        fh.write(samples.tobytes())


def read_samples(path):
    """Return ``(header, samples)``."""
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != MAGIC:
            raise SchemaMismatch(f"{path}: not a sample file (bad magic line)")
        header = json.loads(fh.readline().decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype="<f8")
    K, k = header["K"], header["k"]
    if data.size != K * k:
        raise SchemaMismatch(f"{path}: expected {K * k} values, found {data.size}")
    return header, data.reshape(K, k).astype(np.float64)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, default=_default))
        fh.write("\n")


def comment_header(fh, meta):
    for key, value in meta.items():
        fh.write(f"# {key}: {_dumps(value)}\n")


def write_diagnostics(path, log_post, schedule, meta):
    """Per-iteration ``iteration, step_size, log_post`` with ``#`` metadata."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        comment_header(fh, meta)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "step_size", "log_post"])
        for t, lp in enumerate(log_post):
            w.writerow([t, repr(float(schedule(t))), repr(float(lp))])


def read_csv_table(path):
    """Read a CSV written by this package, skipping ``#`` lines."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
