"""Dense SPD factorisation with jitter escalation and seeded Gaussian draws.

All arithmetic is float64. Random streams come from numpy's PCG64 bit
generator, whose integer stream is fixed for a given seed across platforms
and numpy versions (NEP 19 stream-compatibility policy).
"""

import numpy as np
from scipy.linalg import cho_solve

from .exceptions import DimensionMismatch, NotPositiveDefinite

JITTER_START = 1e-6
JITTER_STOP = 1e-2
SYMMETRY_RTOL = 1e-10


def _jitter_ladder(A, jitter):
    scale = float(np.mean(np.diag(A)))
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    ladder = [float(jitter)]
    level = JITTER_START
    while level <= JITTER_STOP * (1 + 1e-12):
        value = level * scale
        if value > ladder[-1]:
            ladder.append(value)
        level *= 10.0
    return ladder


def cholesky(A, jitter=0.0, *, return_jitter=False):
    """Lower Cholesky factor of ``A + j I``.

    The requested ``jitter`` is tried first; on failure ``j`` climbs the ladder
    ``1e-6, 1e-5, ..., 1e-2`` times ``mean(diag(A))``.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric matrix.
    jitter : float
        Initial diagonal shift, >= 0.
    return_jitter : bool
        Also return the shift that was finally used.

    Raises
    ------
    NotPositiveDefinite
        If factorisation fails at the top of the ladder.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got shape {A.shape}")
    if jitter < 0:
        raise ValueError("jitter must be non-negative")
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    norm = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > SYMMETRY_RTOL * max(norm, 1e-300):
        raise ValueError("matrix is not symmetric within 1e-10 relative tolerance")

    eye = np.eye(A.shape[0])
    for j in _jitter_ladder(A, jitter):
        try:
            L = np.linalg.cholesky(A + j * eye)
        except np.linalg.LinAlgError:
            continue
        return (L, j) if return_jitter else L
    raise NotPositiveDefinite(
        f"factorisation failed up to jitter {JITTER_STOP:g} * mean(diag(A))"
    )


def solve_spd(L, b):
    """Solve ``(L L^T) x = b`` given the lower Cholesky factor ``L``."""
    L = np.asarray(L, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != L.shape[0]:
        raise DimensionMismatch(
            f"right-hand side has {b.shape[0]} rows, factor has {L.shape[0]}"
        )
    return cho_solve((L, True), b, check_finite=False)


def make_rng(seed):
    """Return an independent PCG64-backed generator for ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed, n):
    """Derive ``n`` statistically independent child seeds from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def gaussian_vector(rng, n):
    """Draw ``n`` i.i.d. standard normals, advancing ``rng``."""
    if n < 1:
        raise DimensionMismatch("gaussian_vector needs n >= 1")
    return rng.standard_normal(n)
