"""Dense/sparse matrix primitives and norm computations.

Matrices are plain float64 numpy arrays in row-major order (validated by
:func:`as_matrix`); the large-graph code paths also accept scipy sparse
matrices wherever only matrix-vector products are needed.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, NonFiniteError, PowerIterationError
from .rng import substream

__all__ = [
    "as_matrix",
    "spectral_norm",
    "frobenius_norm",
    "hadamard",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITERS",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10000


def as_matrix(m) -> np.ndarray:
    """Validate and return ``m`` as a 2-D float64 array.

    Raises DimensionError for non-2-D or empty input and NonFiniteError
    if any entry is NaN or infinite.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix must be at least 1x1, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix contains NaN or infinite entries")
    return a


def _validated(m):
    if sp.issparse(m):
        if not np.all(np.isfinite(m.data)):
            raise NonFiniteError("sparse matrix contains NaN or infinite entries")
        return m
    return as_matrix(m)


def spectral_norm(m, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                  seed: int = 0) -> float:
    """Largest singular value of ``m`` by power iteration on m^T m.

    The start vector is derived deterministically from ``seed`` so repeated
    calls are bit-reproducible. Convergence criterion:
    |sigma_t - sigma_{t-1}| <= tol * max(1, sigma_t).

    Accepts dense arrays or scipy sparse matrices (only matvecs are used).
    Raises PowerIterationError on non-convergence, carrying the last
    estimate and residual.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    a = _validated(m)
    n_cols = a.shape[1]
    at = a.T
    rng = substream(seed, "power-iteration")
    v = rng.standard_normal(n_cols)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:  # cannot happen with standard_normal, kept for safety
        v = np.ones(n_cols)
        nv = float(np.linalg.norm(v))
    v /= nv

    sigma_prev = np.inf
    sigma = 0.0
    for it in range(1, max_iters + 1):
        u = a @ v
        sigma = float(np.linalg.norm(u))
        if sigma == 0.0:
            # v is (numerically) in the null space; for a random start this
            # means the matrix itself is zero.
            return 0.0
        if abs(sigma - sigma_prev) <= tol * max(1.0, sigma):
            return sigma
        w = at @ u
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return sigma
        v = w / nw
        sigma_prev = sigma
    raise PowerIterationError(
        f"power iteration did not converge in {max_iters} iterations "
        f"(last sigma={sigma!r}, residual={abs(sigma - sigma_prev)!r})",
        sigma=sigma,
        residual=abs(sigma - sigma_prev),
        iterations=max_iters,
    )


def frobenius_norm(m) -> float:
    """sqrt of the sum of squared entries."""
    a = _validated(m)
    if sp.issparse(a):
        return float(np.sqrt(np.sum(a.data * a.data)))
    return float(np.linalg.norm(a, "fro"))


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two equally shaped matrices."""
    am = as_matrix(a)
    bm = as_matrix(b)
    if am.shape != bm.shape:
        raise DimensionError(f"shape mismatch for entrywise product: {am.shape} vs {bm.shape}")
    return am * bm
