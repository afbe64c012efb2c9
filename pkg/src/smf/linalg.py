"""Dense linear algebra primitives shared by the solver and the analyzers.

All functions operate on float64 numpy arrays and are pure: no global state,
no in-place mutation of caller data, and bitwise-deterministic results for
identical inputs.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "EmptyRowError",
    "frobenius_norm",
    "numerical_rank",
    "pseudoinverse",
    "row_normalize",
    "simplex_project",
    "simplex_project_rows",
]

DEFAULT_RANK_TOL = 1e-10


class EmptyRowError(ValueError):
    """Raised when a row with zero sum cannot be normalized."""

    def __init__(self, index: int):
        self.index = int(index)
        super().__init__(f"row {self.index} sums to zero and cannot be normalized")


def _as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite values")
    return m


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries."""
    m = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("input contains non-finite values")
    return float(np.sqrt(np.sum(m * m)))


def _svd(m: np.ndarray):
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return u, s, vt


def numerical_rank(a, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``rank_tol`` times the largest one."""
    m = _as_matrix(a)
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


def pseudoinverse(a, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with a relative cutoff.

    Singular values at or below ``rank_tol`` times the largest singular value
    are treated as zero.  An all-zero input maps to the all-zero matrix of
    transposed shape (numerical rank 0).

    Parameters
    ----------
    a : array_like, shape (n, m)
        Matrix to invert; all entries must be finite.
    rank_tol : float
        Relative singular-value cutoff, must be positive.

    Returns
    -------
    numpy.ndarray, shape (m, n)
    """
    m = _as_matrix(a)
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    u, s, vt = _svd(m)
    if s[0] <= 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    keep = s > rank_tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def row_normalize(a) -> np.ndarray:
    """Scale each row to sum to 1.

    Accepts a matrix or a single vector (treated as one row).  Raises
    :class:`EmptyRowError` with the offending row index if any row sums to
    zero.
    """
    arr = np.asarray(a, dtype=np.float64)
    squeeze = arr.ndim == 1
    m = _as_matrix(np.atleast_2d(arr))
    if np.any(m < 0):
        raise ValueError("row_normalize expects non-negative entries")
    sums = m.sum(axis=1)
    zero = np.flatnonzero(sums == 0.0)
    if zero.size:
        raise EmptyRowError(zero[0])
    out = m / sums[:, None]
    return out[0] if squeeze else out


def _project_once(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    hit = np.flatnonzero(u * ind > cssv)
    rho = hit[-1] if hit.size else 0
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _simplex_rows_raw(m: np.ndarray) -> np.ndarray:
    # Vectorized per-row simplex projection without the exact-sum
    # canonicalization pass; row sums land within ~1e-15 of 1.  Internal hot
    # path for iterative solvers; public callers get simplex_project_rows.
    u = -np.sort(-m, axis=1)
    cssv = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, m.shape[1] + 1)
    rho = np.maximum((u * ind > cssv).cumsum(axis=1).argmax(axis=1), 0)
    theta = cssv[np.arange(m.shape[0]), rho] / (rho + 1.0)
    return np.maximum(m - theta[:, None], 0.0)


def _canonicalize(w: np.ndarray) -> np.ndarray:
    # Rewrite the smallest positive entry so that the cumulative sum of the
    # descending-sorted support is exactly 1.0, which makes the projection a
    # bitwise fixed point of _project_once.
    w = w.copy()
    pos = np.flatnonzero(w > 0)
    order = pos[np.argsort(-w[pos], kind="stable")]
    while order.size:
        cs = np.cumsum(w[order])
        if cs[-1] == 1.0:
            return w
        partial = cs[-2] if order.size > 1 else 0.0
        last = 1.0 - partial
        if last > 0.0:
            w[order[-1]] = last
            return w
        w[order[-1]] = 0.0
        order = order[:-1]
    w[0] = 1.0
    return w


def simplex_project(v) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    The output is non-negative, sums to 1 (within 1e-12, and exactly along
    the descending cumulative sum used internally), and the projection is
    idempotent: projecting an already-projected vector returns it unchanged.
    """
    x = np.asarray(v, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("simplex_project expects a non-empty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("simplex_project expects finite values")
    if x.size == 1:
        return np.array([1.0])
    # Shift very large inputs toward the origin; the projection is invariant
    # to adding a constant to every coordinate, and moderate magnitudes avoid
    # catastrophic cancellation in the threshold computation.
    if np.max(np.abs(x)) > 2.0:
        x = x - (np.max(x) - 1.0)
    w = _project_once(x)
    for _ in range(32):
        if np.array_equal(_project_once(w), w):
            return w
        w = _canonicalize(w)
    return w


def simplex_project_rows(a) -> np.ndarray:
    """Project each row of a matrix onto the probability simplex."""
    m = _as_matrix(a)
    return np.vstack([simplex_project(row) for row in m])
