"""Uniqueness analysis for row-stochastic factorizations.

Given a factor pair (W, H), this module decides whether the factorization is
unique up to column permutation, computes the feasible parameter intervals
along each coordinate axis of the mixing-matrix space, and provides a
random-walk sampler over feasible mixing matrices that serves as a
brute-force cross-check for the analytic intervals.

All factor indices, row indices, and column indices in this module are
0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .factors import FactorPair

__all__ = [
    "AxisBound",
    "DegenerateFactorError",
    "MixingMatrix",
    "SupportSets",
    "UniquenessReport",
    "Violation",
    "ViolationKind",
    "analysis_report",
    "average_consistency_diagnostic",
    "check_uniqueness",
    "natural_bounds",
    "sample_feasible_A",
    "support_sets",
]

# Estimated factors are feasible only up to the solver's slack, so entries
# below this threshold are treated as structural zeros; exact synthetic
# factors should be analyzed with zero_tol=0.
DEFAULT_ZERO_TOL_ESTIMATED = 1e-6

_ROW_SUM_TOL = 1e-10


class DegenerateFactorError(ValueError):
    """Raised when some factor index has an empty support on one side."""


class ViolationKind(Enum):
    W_SUBSET = "W_SUBSET"
    H_SUBSET = "H_SUBSET"


@dataclass(frozen=True)
class SupportSets:
    """Nonzero patterns of the factor columns of W and factor rows of H.

    ``w_support[r]`` holds the row indices i with ``|W[i, r]| > zero_tol``;
    ``h_support[r]`` holds the column indices j with ``|H[r, j]| > zero_tol``.
    The comparison is strict, so entries equal to ``zero_tol`` count as zero.
    """

    w_support: tuple[frozenset, ...]
    h_support: tuple[frozenset, ...]
    zero_tol: float


@dataclass(frozen=True)
class Violation:
    """One ordered pair whose supports are nested, blocking uniqueness."""

    kind: ViolationKind
    r1: int
    r2: int


@dataclass(frozen=True)
class UniquenessReport:
    """Outcome of the support-containment uniqueness test.

    ``unique`` is true exactly when ``violations`` is empty.  ``anchor_rows``
    maps each factor index r to the rows of W supported only on r;
    ``anchor_cols`` maps r to the columns of H supported only on r.
    """

    unique: bool
    violations: tuple[Violation, ...]
    anchor_rows: dict
    anchor_cols: dict

    def __post_init__(self):
        if self.unique != (len(self.violations) == 0):
            raise ValueError("unique flag must match emptiness of violations")


def support_sets(factors: FactorPair, zero_tol: float = 0.0) -> SupportSets:
    """Compute the per-factor support sets of W's columns and H's rows."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be non-negative")
    w, h = factors.w, factors.h
    w_sup = tuple(frozenset(np.flatnonzero(np.abs(w[:, r]) > zero_tol).tolist())
                  for r in range(factors.rank))
    h_sup = tuple(frozenset(np.flatnonzero(np.abs(h[r, :]) > zero_tol).tolist())
                  for r in range(factors.rank))
    return SupportSets(w_support=w_sup, h_support=h_sup, zero_tol=float(zero_tol))


def _anchors(matrix_abs: np.ndarray, zero_tol: float) -> dict:
    # A row (of W) or column (of H, passed transposed) anchors factor r when
    # its support is exactly {r}.
    nz = matrix_abs > zero_tol
    out = {r: [] for r in range(matrix_abs.shape[1])}
    single = nz.sum(axis=1) == 1
    for i in np.flatnonzero(single):
        out[int(np.flatnonzero(nz[i])[0])].append(int(i))
    return out


def check_uniqueness(factors: FactorPair, zero_tol: float = 0.0) -> UniquenessReport:
    """Test uniqueness up to column permutation via support containment.

    The factorization is unique exactly when no ordered pair (r1, r2) with
    r1 != r2 has the support of W's column r1 contained in that of column r2,
    and likewise for the rows of H.  Containment includes equality, and an
    empty support is contained in every set.
    """
    sets = support_sets(factors, zero_tol)
    violations = []
    for r1 in range(factors.rank):
        for r2 in range(factors.rank):
            if r1 == r2:
                continue
            if sets.w_support[r1] <= sets.w_support[r2]:
                violations.append(Violation(ViolationKind.W_SUBSET, r1, r2))
            if sets.h_support[r1] <= sets.h_support[r2]:
                violations.append(Violation(ViolationKind.H_SUBSET, r1, r2))
    return UniquenessReport(
        unique=not violations,
        violations=tuple(violations),
        anchor_rows=_anchors(np.abs(factors.w), zero_tol),
        anchor_cols=_anchors(np.abs(factors.h).T, zero_tol),
    )


@dataclass(frozen=True)
class AxisBound:
    """Feasible interval for the single free parameter on one axis.

    The axis (r1, r2) perturbs the factorization by mixing factor r2 into
    factor r1; ``lower`` comes from keeping W non-negative and ``upper``
    from keeping H non-negative, so ``lower <= 0 <= upper`` always holds
    and the factorization is pinned on this axis exactly when the width
    is 0.
    """

    r1: int
    r2: int
    lower: float
    upper: float
    width: float

    def __post_init__(self):
        if not (self.lower <= 0.0 <= self.upper):
            raise ValueError("axis interval must contain 0")
        if abs(self.width - (self.upper - self.lower)) > 1e-12:
            raise ValueError("width must equal upper - lower")


def _ratio_min(num: np.ndarray, den: np.ndarray, zero_tol: float) -> float:
    # Minimum of num/den over entries with den > zero_tol; numerators at or
    # below zero_tol count as exact zeros since they impose no constraint
    # beyond non-negativity.
    keep = den > zero_tol
    num, den = num[keep], den[keep]
    ratios = np.where(num <= zero_tol, 0.0, num / den)
    return float(ratios.min())


def natural_bounds(factors: FactorPair, zero_tol: float = 0.0) -> list:
    """Closed-form feasible intervals along all R(R-1) coordinate axes.

    For the ordered pair (r1, r2) the interval is
    ``[-min_i W[i, r2] / W[i, r1], min_j H[r1, j] / H[r2, j]]`` with the
    minima restricted to denominators above ``zero_tol``.  Bounds are
    returned in lexicographic (r1, r2) order.

    Raises
    ------
    DegenerateFactorError
        If some factor index has no entry above ``zero_tol`` in its W column
        or its H row.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be non-negative")
    w, h = factors.w, factors.h
    rank = factors.rank
    for r in range(rank):
        if not np.any(w[:, r] > zero_tol):
            raise DegenerateFactorError(f"factor {r} has empty support in W")
        if not np.any(h[r, :] > zero_tol):
            raise DegenerateFactorError(f"factor {r} has empty support in H")
    bounds = []
    for r1 in range(rank):
        for r2 in range(rank):
            if r1 == r2:
                continue
            lower = -_ratio_min(w[:, r2], w[:, r1], zero_tol)
            upper = _ratio_min(h[r1, :], h[r2, :], zero_tol)
            bounds.append(AxisBound(r1=r1, r2=r2, lower=lower, upper=upper,
                                    width=upper - lower))
    return bounds


@dataclass(frozen=True)
class MixingMatrix:
    """Square change-of-basis matrix whose rows sum to 1."""

    a: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.a, dtype=np.float64)
        object.__setattr__(self, "a", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("mixing matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("mixing matrix must be finite")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > _ROW_SUM_TOL:
            raise ValueError("mixing matrix rows must sum to 1")
        if np.linalg.det(m) == 0.0:
            raise ValueError("mixing matrix must be invertible")


def _fix_row_sums(a: np.ndarray) -> np.ndarray:
    # Re-impose unit row sums by adjusting the diagonal, leaving the
    # off-diagonal proposal untouched.
    out = a.copy()
    np.fill_diagonal(out, 0.0)
    np.fill_diagonal(out, 1.0 - out.sum(axis=1))
    return out


def _is_feasible(a: np.ndarray, w: np.ndarray, h: np.ndarray,
                 zero_tol: float) -> bool:
    if np.min(w @ a) < -zero_tol:
        return False
    try:
        mixed_h = np.linalg.solve(a, h)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(mixed_h)):
        return False
    return np.min(mixed_h) >= -zero_tol


def sample_feasible_A(factors: FactorPair, n_samples: int, seed: int,
                      step: float = 0.05, *, zero_tol: float = 0.0) -> list:
    """Random-walk sampler over feasible mixing matrices.

    Starting from the identity, each iteration proposes either a reset to
    the identity, a move of a single off-diagonal entry, or a dense Gaussian
    perturbation (row sums re-imposed via the diagonal in all cases).  The
    proposal is adopted only when both W.A and solve(A, H) stay above
    ``-zero_tol`` elementwise; the current state is recorded every
    iteration, so exactly ``n_samples`` matrices are returned.  The single
    off-diagonal moves make the walk trace out the coordinate-axis
    intervals, which is what the analytic bounds are checked against.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if step <= 0:
        raise ValueError("step must be positive")
    rng = np.random.default_rng(seed)
    w, h = factors.w, factors.h
    rank = factors.rank
    eye = np.eye(rank)
    current = eye
    out = []
    for _ in range(n_samples):
        u = rng.random()
        if rank < 2 or u < 0.25:
            proposal = eye
        elif u < 0.625:
            r1 = int(rng.integers(rank))
            r2 = int((r1 + 1 + rng.integers(rank - 1)) % rank)
            proposal = current.copy()
            proposal[r1, r2] += rng.normal(0.0, step)
            proposal = _fix_row_sums(proposal)
        else:
            proposal = _fix_row_sums(current + rng.normal(0.0, step, (rank, rank)))
        if _is_feasible(proposal, w, h, zero_tol):
            current = proposal
        out.append(MixingMatrix(a=current.copy()))
    return out


def average_consistency_diagnostic(x, factors: FactorPair) -> float:
    """Max-norm gap between column means of X and of the reconstruction.

    Averaging X = W H + noise over rows gives mean(X) = mean(W) H up to the
    averaged noise, so for a correct H this gap shrinks with the row count
    while a wrong H leaves a persistent offset.
    """
    xm = np.asarray(x, dtype=np.float64)
    if xm.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if xm.shape != (factors.w.shape[0], factors.h.shape[1]):
        raise ValueError(
            f"X shape {xm.shape} does not match factors "
            f"({factors.w.shape[0]}, {factors.h.shape[1]})"
        )
    x_mean = xm.mean(axis=0)
    w_mean = factors.w.mean(axis=0)
    return float(np.max(np.abs(x_mean - w_mean @ factors.h)))


_HISTOGRAM_EDGES = (0.0, 0.001, 0.01, 0.02, 1.0)


def _widths_histogram(widths) -> dict:
    # counts[k] tallies widths in [edges[k], edges[k+1]); the final slot
    # tallies widths >= the last edge.
    edges = _HISTOGRAM_EDGES
    counts = [0] * len(edges)
    for width in widths:
        slot = len(edges) - 1
        for k in range(len(edges) - 1):
            if edges[k] <= width < edges[k + 1]:
                slot = k
                break
        counts[slot] += 1
    return {"edges": list(edges), "counts": counts}


def analysis_report(factors: FactorPair, zero_tol: float = 0.0) -> dict:
    """JSON-ready uniqueness and bounds report.

    Keys: ``unique``, ``violations`` (list of {kind, r1, r2}), ``anchors``
    (factor index as string -> {rows, cols}), ``bounds`` (list of
    {r1, r2, lower, upper, width} in lexicographic axis order), and
    ``summary`` ({max_width, widths_histogram}).
    """
    report = check_uniqueness(factors, zero_tol)
    bounds = natural_bounds(factors, zero_tol)
    widths = [b.width for b in bounds]
    return {
        "unique": report.unique,
        "violations": [
            {"kind": v.kind.value, "r1": v.r1, "r2": v.r2}
            for v in report.violations
        ],
        "anchors": {
            str(r): {"rows": report.anchor_rows[r], "cols": report.anchor_cols[r]}
            for r in range(factors.rank)
        },
        "bounds": [
            {"r1": b.r1, "r2": b.r2, "lower": b.lower, "upper": b.upper,
             "width": b.width}
            for b in bounds
        ],
        "summary": {
            "max_width": max(widths) if widths else 0.0,
            "widths_histogram": _widths_histogram(widths),
        },
    }
