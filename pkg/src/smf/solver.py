"""Constrained least-squares factorization solver.

The estimator concentrates W out of the problem: for a candidate H, the
weight matrix is W = X @ pinv(H), and the loss is the Frobenius norm of the
residual X - W @ H plus weighted penalties for the constraints that W and H
must satisfy (non-negativity, rows summing to 1 on the stochastic side, and
H bounded by 1).  Minimization runs projected/penalized gradient descent on
H with a backtracking line search, restarted from several seeded random
initializations.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .factors import FactorPair, Orientation
from .linalg import (
    _simplex_rows_raw,
    frobenius_norm,
    numerical_rank,
    pseudoinverse,
    row_normalize,
    simplex_project_rows,
)

__all__ = [
    "InvalidInputError",
    "Mode",
    "RankDeficientError",
    "SolveResult",
    "SolverConfig",
    "concentrate_w",
    "factorize",
    "objective",
    "objective_terms",
    "EPS_FEAS_PENALTY",
    "EPS_FEAS_PROJECTED",
]

EPS_FEAS_PENALTY = 1e-3
EPS_FEAS_PROJECTED = 1e-9

_MAX_HALVINGS = 60
_X_ROW_SUM_TOL = 1e-6


class InvalidInputError(ValueError):
    """Raised when the data matrix or configuration is unusable."""


class RankDeficientError(ValueError):
    """Raised when H does not have full row rank."""


class Mode(Enum):
    """How constraints are enforced during optimization."""

    PENALTY = "penalty"
    PROJECTED = "projected"


@dataclass
class SolverConfig:
    rank: int
    orientation: Orientation = Orientation.W_ROWS_SUM_TO_1
    max_iter: int = 500
    conv_tol: float = 1e-8
    penalty_sum1: float = 100.0
    penalty_nonneg: float = 10.0
    restarts: int = 5
    seed: int = 0
    mode: Mode = Mode.PENALTY
    rank_tol: float = 1e-10

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidInputError("rank must be at least 1")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be at least 1")
        if self.restarts < 1:
            raise InvalidInputError("restarts must be at least 1")
        if self.conv_tol <= 0:
            raise InvalidInputError("conv_tol must be positive")
        if self.penalty_sum1 < 0 or self.penalty_nonneg < 0:
            raise InvalidInputError("penalty weights must be non-negative")


@dataclass
class SolveResult:
    factors: FactorPair
    objective: float
    objective_trace: list[float]
    iterations: int
    converged: bool
    best_restart: int
    restart_objectives: list[float] = field(default_factory=list)


def _check_x(x) -> np.ndarray:
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise InvalidInputError("X must be a non-empty 2-dimensional matrix")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("X contains non-finite values")
    if np.any(m < 0):
        raise InvalidInputError(f"X contains negative entries (min {m.min():.3e})")
    return m


def _check_h_rank(h: np.ndarray, rank_tol: float) -> None:
    if numerical_rank(h, rank_tol) < h.shape[0]:
        raise RankDeficientError(
            f"H of shape {h.shape} does not have full row rank"
        )


def concentrate_w(x, h, rank_tol: float = 1e-10) -> np.ndarray:
    """Least-squares weights for fixed H: W = X @ pinv(H).

    Raises :class:`RankDeficientError` if H lacks full row rank.
    """
    xm = _check_x(x)
    hm = np.asarray(h, dtype=np.float64)
    _check_h_rank(hm, rank_tol)
    return xm @ pseudoinverse(hm, rank_tol)


def objective_terms(x, h, config: SolverConfig) -> dict[str, float]:
    """Break the concentrated objective into its named components.

    In PENALTY mode W is the raw least-squares weight X pinv(H) and the keys
    are ``residual`` (Frobenius norm of X - W H), ``w_nonneg``, ``h_nonneg``,
    ``h_upper``, plus the row-sum penalties ``w_row_sum`` / ``h_row_sum`` for
    whichever factors the orientation declares stochastic.  In PROJECTED mode
    W is first projected onto its feasible set, so its penalty terms are
    identically zero and only the residual and H terms remain.
    """
    xm = _check_x(x)
    hm = np.asarray(h, dtype=np.float64)
    _check_h_rank(hm, config.rank_tol)
    hp = pseudoinverse(hm, config.rank_tol)
    w = xm @ hp
    if config.mode is Mode.PROJECTED:
        w = _feasible_w(w, config.orientation)
    return _terms_from_parts_z(xm - w @ hm, hm, w, config)


def _terms_from_parts_z(z, h, w, config: SolverConfig) -> dict[str, float]:
    p1, p2 = config.penalty_sum1, config.penalty_nonneg
    terms = {"residual": frobenius_norm(z)}
    if config.mode is not Mode.PROJECTED:
        terms["w_nonneg"] = p2 * float(np.clip(-w, 0.0, None).sum())
        if config.orientation.w_stochastic:
            terms["w_row_sum"] = p1 * float(np.abs(w.sum(axis=1) - 1.0).sum())
    if config.orientation.h_stochastic:
        terms["h_row_sum"] = p1 * float(np.abs(h.sum(axis=1) - 1.0).sum())
    terms["h_nonneg"] = p2 * float(np.clip(-h, 0.0, None).sum())
    terms["h_upper"] = p2 * float(np.clip(h - 1.0, 0.0, None).sum())
    return terms


def objective(x, h, config: SolverConfig) -> float:
    """Concentrated objective at H (penalized or projected per config.mode)."""
    return float(sum(objective_terms(x, h, config).values()))


def _objective_value(x, h, config) -> float:
    # Internal twin of objective() that reports +inf instead of raising on a
    # rank-deficient H, so the line search can reject such steps.
    obj, _, _, _ = _eval(x, h, config)
    return obj


def _eval(x, h, config):
    """Objective value plus the intermediates the gradient reuses.

    Returns ``(value, hp, w, z)``; rank-deficient H yields
    ``(inf, None, None, None)``.
    """
    u, s, vt = np.linalg.svd(h, full_matrices=False)
    if s[0] <= 0.0 or s[-1] <= config.rank_tol * s[0]:
        return np.inf, None, None, None
    hp = (vt.T / s) @ u.T
    w = x @ hp
    if config.mode is Mode.PROJECTED:
        w = _feasible_w(w, config.orientation)
    z = x - w @ h
    obj = float(sum(_terms_from_parts_z(z, h, w, config).values()))
    return obj, hp, w, z


def _smooth_sign(t: np.ndarray, mu: float) -> np.ndarray:
    if mu <= 0.0:
        return np.sign(t)
    return np.tanh(t / mu)


def _smooth_step(t: np.ndarray, mu: float) -> np.ndarray:
    # Smooth version of the indicator [t > 0], used for hinge derivatives.
    if mu <= 0.0:
        return (t > 0.0).astype(np.float64)
    return 1.0 / (1.0 + np.exp(np.clip(-t / mu, -500.0, 500.0)))


def _gradient(x, h, config, mu: float = 0.0, parts=None) -> np.ndarray:
    """Analytic (sub)gradient / search direction with respect to H.

    PENALTY mode: the residual and W-dependent penalty terms are
    differentiated through W = X pinv(H) using the full-row-rank derivative
    of the pseudoinverse.  With ``mu > 0`` the kinked penalty derivatives
    (sign and hinge indicators) are smoothed at width ``mu``; the line
    search still evaluates the exact objective, so smoothing only shapes
    the search direction.

    PROJECTED mode: gradient of the residual with the projected W held
    fixed; feasibility is enforced by projection in the line search, so no
    penalty terms enter the direction.
    """
    p1, p2 = config.penalty_sum1, config.penalty_nonneg
    if parts is None:
        hp = pseudoinverse(h, config.rank_tol)
        w = x @ hp
        if config.mode is Mode.PROJECTED:
            w = _feasible_w(w, config.orientation)
        z = x - w @ h
    else:
        hp, w, z = parts
    g = np.zeros_like(h)

    fro = frobenius_norm(z)
    if fro > 0.0:
        g -= (w.T @ z) / fro
    if config.mode is Mode.PROJECTED:
        return g

    # Derivative of the penalties that act on W, pushed through pinv(H).
    v = np.zeros_like(w)
    if config.orientation.w_stochastic:
        v += p1 * _smooth_sign(w.sum(axis=1) - 1.0, mu)[:, None]
    v -= p2 * _smooth_step(-w, mu)
    if np.any(v):
        gram = h @ h.T
        g += np.linalg.solve(gram, v.T @ z)
        g -= (w.T @ v) @ hp.T

    if config.orientation.h_stochastic:
        g += p1 * _smooth_sign(h.sum(axis=1) - 1.0, mu)[:, None]
    g += p2 * (_smooth_step(h - 1.0, mu) - _smooth_step(-h, mu))
    return g


def _feasible_h(h: np.ndarray, orientation: Orientation) -> np.ndarray:
    if orientation.h_stochastic:
        return _simplex_rows_raw(h)
    return np.clip(h, 0.0, 1.0)


def _init_h(rng: np.random.Generator, rank: int, n_cols: int,
            orientation: Orientation) -> np.ndarray:
    h0 = rng.uniform(0.0, 1.0, size=(rank, n_cols))
    if orientation.h_stochastic:
        h0 = row_normalize(h0)
    return h0


_MU_START = 1e-1
_MU_FLOOR = 1e-9
_BB_MIN, _BB_MAX = 1e-12, 1e8
_WARM_START_ROUNDS = 2000


def _descend(x, h, config: SolverConfig, max_iter: int, conv_tol: float,
             progress: Optional[Callable[[int, float], None]]):
    """Projected/penalized gradient descent from ``h``.

    Spectral (Barzilai-Borwein) initial steps are backtracked by halving
    until the exact objective decreases.  When no decrease is found along
    the current smoothed direction the smoothing width shrinks before the
    point is declared stationary.
    """
    obj, hp, w, z = _eval(x, h, config)
    trace = [obj]
    converged = False
    smoothable = config.mode is Mode.PENALTY and (
        config.penalty_sum1 > 0.0 or config.penalty_nonneg > 0.0)
    mu = _MU_START if smoothable else 0.0
    h_prev = None
    g_prev = None
    # Annealing passes that fail to step do not count against max_iter; the
    # mu ladder is finite so the extra budget is bounded.
    for _ in range(max_iter + 200):
        if len(trace) > max_iter:
            break
        g = _gradient(x, h, config, mu, parts=(hp, w, z))
        gn = frobenius_norm(g)
        if gn == 0.0:
            converged = True
            break
        if h_prev is None:
            step = 1.0 / gn
        else:
            s = h - h_prev
            y = g - g_prev
            sy = float(np.sum(s * y))
            step = float(np.sum(s * s)) / sy if sy > 1e-300 else 1.0 / gn
            step = min(max(step, _BB_MIN), _BB_MAX)
        accepted = None
        for _ in range(_MAX_HALVINGS):
            cand = h - step * g
            if config.mode is Mode.PROJECTED:
                cand = _feasible_h(cand, config.orientation)
            val, hp_c, w_c, z_c = _eval(x, cand, config)
            if val < obj:
                accepted = (cand, val, hp_c, w_c, z_c)
                break
            step *= 0.5
        if accepted is None:
            if smoothable and mu > _MU_FLOOR:
                mu *= 0.1
                h_prev = g_prev = None
                continue
            converged = True
            break
        h_prev, g_prev = h, g
        cand, val, hp, w, z = accepted
        rel = (obj - val) / max(abs(obj), 1e-300)
        h, obj = cand, val
        trace.append(obj)
        if progress is not None:
            progress(len(trace) - 1, obj)
        if rel < conv_tol:
            if smoothable and mu > _MU_FLOOR:
                mu *= 0.1
                h_prev = g_prev = None
                continue
            converged = True
            break
    return h, trace, converged


def _feasible_w(w: np.ndarray, orientation: Orientation) -> np.ndarray:
    if orientation.w_stochastic:
        return _simplex_rows_raw(w)
    return np.clip(w, 0.0, None)


def _warm_start(x, h, config: SolverConfig, rounds: int) -> np.ndarray:
    """Projected alternating least squares on the bilinear loss.

    Cheap warm-up that settles both the row space and a feasible
    representative before the exact-objective descent takes over.  Each
    round refreshes W from the current H, projects it feasible, then takes
    a few Lipschitz-step projected gradient updates on H for that fixed W.
    Stops when the loss plateaus or effectively reaches zero.
    """
    floor = 1e-13 * max(1.0, frobenius_norm(x))
    prev = np.inf
    for _ in range(rounds):
        s = np.linalg.svd(h, compute_uv=False)
        if s[0] <= 0.0 or s[-1] <= config.rank_tol * s[0]:
            break
        w = _feasible_w(x @ pseudoinverse(h, config.rank_tol), config.orientation)
        gram = w.T @ w
        lip = float(np.linalg.norm(gram, 2))
        if lip <= 0.0:
            break
        wtx = w.T @ x
        for _ in range(3):
            h = _feasible_h(h - (gram @ h - wtx) / lip, config.orientation)
        loss = frobenius_norm(x - w @ h)
        if loss < floor or prev - loss < 1e-13 * max(1.0, prev):
            break
        prev = loss
    return h


def _solve_one(x, config: SolverConfig, restart: int,
               progress: Optional[Callable[[int, float], None]]):
    rng = np.random.default_rng(config.seed + restart)
    h = _init_h(rng, config.rank, x.shape[1], config.orientation)
    if config.mode is Mode.PROJECTED:
        h = _feasible_h(h, config.orientation)
    h = _warm_start(x, h, config, rounds=_WARM_START_ROUNDS)
    return _descend(x, h, config, config.max_iter, config.conv_tol, progress)


def _snap(arr: np.ndarray, eps: float, upper: bool = False) -> np.ndarray:
    out = arr.copy()
    out[(out > -eps) & (out < 0.0)] = 0.0
    if upper:
        out[(out > 1.0) & (out < 1.0 + eps)] = 1.0
    return out


def _postprocess(x, h, config: SolverConfig) -> FactorPair:
    w = x @ pseudoinverse(h, config.rank_tol)
    if config.mode is Mode.PROJECTED:
        if config.orientation.w_stochastic:
            w = simplex_project_rows(w)
        else:
            w = np.clip(w, 0.0, None)
        if config.orientation.h_stochastic:
            h = simplex_project_rows(h)
        else:
            h = np.clip(h, 0.0, 1.0)
    else:
        w = _snap(w, EPS_FEAS_PENALTY)
        h = _snap(h, EPS_FEAS_PENALTY, upper=True)
    return FactorPair(w=w, h=h, orientation=config.orientation)


def factorize(x, config: SolverConfig, *, threads: int = 1,
              progress: Optional[Callable[[int, float], None]] = None) -> SolveResult:
    """Estimate a non-negative factorization of X under the configured
    adding-up constraints.

    Runs ``config.restarts`` independent descents seeded ``config.seed + k``
    and keeps the restart with the lowest final objective (ties go to the
    lowest restart index).  The returned W is the concentrated least-squares
    weight matrix post-processed to feasibility for the configured mode.

    Parameters
    ----------
    x : array_like, shape (n, m)
        Non-negative data matrix.  With orientation BOTH the rows must
        already sum to 1.
    config : SolverConfig
    threads : int
        Number of worker threads across restarts; results are identical for
        any thread count.
    progress : callable, optional
        Called as ``progress(iteration, objective)`` after each accepted
        descent step.

    Returns
    -------
    SolveResult
    """
    xm = _check_x(x)
    n_rows, n_cols = xm.shape
    if config.rank >= min(n_rows, n_cols):
        raise InvalidInputError(
            f"rank {config.rank} must be smaller than min(X.shape) = {min(xm.shape)}"
        )
    if config.orientation is Orientation.BOTH:
        dev = float(np.max(np.abs(xm.sum(axis=1) - 1.0)))
        if dev > _X_ROW_SUM_TOL:
            raise InvalidInputError(
                f"orientation BOTH requires X rows summing to 1 (max deviation {dev:.3e})"
            )

    def run(k: int):
        cb = progress if k == 0 else None
        return _solve_one(xm, config, k, cb)

    if threads > 1 and config.restarts > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(config.restarts)))
    else:
        results = [run(k) for k in range(config.restarts)]

    finals = [trace[-1] for _, trace, _ in results]
    best = min(range(config.restarts), key=lambda k: (finals[k], k))
    h, trace, converged = results[best]
    factors = _postprocess(xm, h, config)
    return SolveResult(
        factors=factors,
        objective=float(trace[-1]),
        objective_trace=[float(t) for t in trace],
        iterations=len(trace) - 1,
        converged=bool(converged),
        best_restart=best,
        restart_objectives=[float(f) for f in finals],
    )
