"""Factor-pair container and feasibility checks.

A factorization X = W @ H is stored as the pair (W, H) together with an
orientation that declares which factor carries the adding-up constraint:
rows of W, rows of H, or both.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = ["Orientation", "FactorPair"]


class Orientation(Enum):
    """Which factor's rows are constrained to sum to 1."""

    W_ROWS_SUM_TO_1 = "w-rows"
    H_ROWS_SUM_TO_1 = "h-rows"
    BOTH = "both"

    @property
    def w_stochastic(self) -> bool:
        return self in (Orientation.W_ROWS_SUM_TO_1, Orientation.BOTH)

    @property
    def h_stochastic(self) -> bool:
        return self in (Orientation.H_ROWS_SUM_TO_1, Orientation.BOTH)


@dataclass(frozen=True)
class FactorPair:
    """Pair of non-negative factors with a declared stochastic dimension.

    Attributes
    ----------
    w : numpy.ndarray, shape (n, rank)
    h : numpy.ndarray, shape (rank, m)
    orientation : Orientation
    """

    w: np.ndarray
    h: np.ndarray
    orientation: Orientation

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        h = np.asarray(self.h, dtype=np.float64)
        if w.ndim != 2 or h.ndim != 2:
            raise ValueError("factors must be 2-dimensional arrays")
        if w.shape[1] != h.shape[0]:
            raise ValueError(
                f"inner dimensions disagree: W is {w.shape}, H is {h.shape}"
            )
        if w.shape[1] < 1:
            raise ValueError("rank must be at least 1")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(h))):
            raise ValueError("factors contain non-finite values")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)

    @property
    def rank(self) -> int:
        return self.w.shape[1]

    def max_violation(self) -> float:
        """Largest feasibility violation over non-negativity and row sums."""
        worst = max(float(np.max(-self.w, initial=0.0)),
                    float(np.max(-self.h, initial=0.0)))
        if self.orientation.w_stochastic:
            worst = max(worst, float(np.max(np.abs(self.w.sum(axis=1) - 1.0))))
        if self.orientation.h_stochastic:
            worst = max(worst, float(np.max(np.abs(self.h.sum(axis=1) - 1.0))))
        return worst

    def validate(self, eps_feas: float) -> None:
        """Raise ValueError if any invariant is violated beyond ``eps_feas``."""
        gap = self.max_violation()
        if gap > eps_feas:
            raise ValueError(
                f"factor pair violates feasibility by {gap:.3e} (> {eps_feas:.1e})"
            )
