"""Per-hour linear price models: ARX by OLS and LEAR by LASSO.

Both operate on variance-stabilised series.  Feature layouts:

ARX, 15 columns for target hour h of day d:
    y[d-1,h], y[d-2,h], y[d-7,h], y[d-1,24], min(y[d-1,:]),
    max(y[d-1,:]), x1[d,h], x2[d,h], 7 weekday dummies.

LEAR, 247 columns shared by all 24 hours of day d:
    y[d-1,:], y[d-2,:], y[d-3,:], y[d-7,:]           (96 lags)
    x1[d,:], x1[d-1,:], x1[d-7,:]                    (72)
    x2[d,:], x2[d-1,:], x2[d-7,:]                    (72)
    7 weekday dummies.

ARX is solved by minimum-norm least squares (the hour-24 column
duplicates the previous-day-last-hour column, so the matrix is rank
deficient by construction).  LEAR is solved by cyclic coordinate
descent on standardised columns, with the penalty weight chosen per
hour by AIC over a 100-point geometric grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numba import njit

from .errors import ConvergenceError

N_ARX_FEATURES = 15
N_LEAR_FEATURES = 247
MIN_LAG_DAYS = 7

CD_TOL = 1e-6
CD_MAX_SWEEPS = 10_000
LAMBDA_GRID_SIZE = 100
LAMBDA_GRID_SPAN = 1e-4    # lambda_min = span * lambda_max

# The AIC path only needs penalty weights ranked correctly, so its grid
# points converge at a looser tolerance than a final fit; the winning
# point is then refit to the full CD_TOL contract before use.
PATH_TOL = 1e-3


# ---------------------------------------------------------------------------
# feature construction
# ---------------------------------------------------------------------------

def weekday_onehot(dow: int) -> np.ndarray:
    out = np.zeros(7)
    out[int(dow) % 7] = 1.0
    return out


def _check_day(y: np.ndarray, x1: np.ndarray, x2: np.ndarray,
               dows: np.ndarray, d: int) -> None:
    T = y.shape[0]
    if d < MIN_LAG_DAYS:
        raise ValueError(f"day {d} has no 7-day lag (needs d >= {MIN_LAG_DAYS})")
    if d > T:
        raise ValueError(f"day {d} beyond available price history ({T} days)")
    if x1.shape[0] <= d or x2.shape[0] <= d or len(dows) <= d:
        raise ValueError(f"fundamentals/day-of-week missing for day {d}")


def build_arx_row(y: np.ndarray, x1: np.ndarray, x2: np.ndarray,
                  dows: np.ndarray, d: int, h: int) -> np.ndarray:
    """Feature row for hour ``h`` of day ``d`` (d may be one past the prices)."""
    _check_day(y, x1, x2, dows, d)
    if not 0 <= h < 24:
        raise ValueError(f"hour index must be 0..23, got {h}")
    prev = y[d - 1]
    return np.concatenate([
        [y[d - 1, h], y[d - 2, h], y[d - 7, h], prev[23], prev.min(), prev.max(),
         x1[d, h], x2[d, h]],
        weekday_onehot(dows[d]),
    ])


def build_lear_row(y: np.ndarray, x1: np.ndarray, x2: np.ndarray,
                   dows: np.ndarray, d: int) -> np.ndarray:
    """Shared feature row for all 24 hours of day ``d``."""
    _check_day(y, x1, x2, dows, d)
    return np.concatenate([
        y[d - 1], y[d - 2], y[d - 3], y[d - 7],
        x1[d], x1[d - 1], x1[d - 7],
        x2[d], x2[d - 1], x2[d - 7],
        weekday_onehot(dows[d]),
    ])


def _onehot_block(dows: np.ndarray) -> np.ndarray:
    block = np.zeros((len(dows), 7))
    block[np.arange(len(dows)), np.asarray(dows, dtype=int) % 7] = 1.0
    return block


def build_arx_matrix(y: np.ndarray, x1: np.ndarray, x2: np.ndarray,
                     dows: np.ndarray, h: int) -> Tuple[np.ndarray, np.ndarray]:
    """Training matrix and targets for hour ``h``, rows = days 7..T-1."""
    T = y.shape[0]
    if T <= MIN_LAG_DAYS:
        raise ValueError(f"window of {T} days leaves no training rows")
    d = np.arange(MIN_LAG_DAYS, T)
    prev = y[d - 1]
    X = np.column_stack([
        y[d - 1, h], y[d - 2, h], y[d - 7, h], prev[:, 23],
        prev.min(axis=1), prev.max(axis=1), x1[d, h], x2[d, h],
    ])
    X = np.hstack([X, _onehot_block(dows[d])])
    return X, y[d, h]


def build_lear_matrix(y: np.ndarray, x1: np.ndarray, x2: np.ndarray,
                      dows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Training matrix (rows, 247) and all-hours targets (rows, 24)."""
    T = y.shape[0]
    if T <= MIN_LAG_DAYS:
        raise ValueError(f"window of {T} days leaves no training rows")
    d = np.arange(MIN_LAG_DAYS, T)
    X = np.hstack([
        y[d - 1], y[d - 2], y[d - 3], y[d - 7],
        x1[d], x1[d - 1], x1[d - 7],
        x2[d], x2[d - 1], x2[d - 7],
        _onehot_block(dows[d]),
    ])
    return X, y[d]


# ---------------------------------------------------------------------------
# fitted models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FittedModel:
    """Linear model in original (unstandardised) feature units."""

    coef: np.ndarray
    intercept: float
    lam: float          # 0 for OLS
    sweeps: int = 0     # coordinate-descent sweeps actually used

    def predict(self, row: np.ndarray) -> float | np.ndarray:
        row = np.asarray(row, dtype=float)
        out = row @ self.coef + self.intercept
        return float(out) if out.ndim == 0 else out


def ols_fit(X: np.ndarray, y: np.ndarray) -> FittedModel:
    """Minimum-norm least squares; no intercept column is added."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != len(y):
        raise ValueError(f"incompatible shapes X{X.shape}, y{y.shape}")
    if X.shape[0] < X.shape[1]:
        raise ValueError(f"underdetermined system: {X.shape[0]} rows for "
                         f"{X.shape[1]} columns")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return FittedModel(coef=coef, intercept=0.0, lam=0.0)


# ---------------------------------------------------------------------------
# LASSO by cyclic coordinate descent on the Gram matrix
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class DesignMatrix:
    """Raw design with cached standardisation statistics.

    Zero-variance columns get unit scale; after centring they are all
    zero and stay out of the model.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != len(self.y):
            raise ValueError(f"incompatible shapes X{self.X.shape}, y{self.y.shape}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("design matrix cannot be standardised: "
                             "non-finite entries present")
        self.col_mean = self.X.mean(axis=0)
        std = self.X.std(axis=0)
        self.col_scale = np.where(std > 0.0, std, 1.0)
        self.y_mean = float(self.y.mean())

    @property
    def rows(self) -> int:
        return self.X.shape[0]

    def standardized(self) -> Tuple[np.ndarray, np.ndarray]:
        Xs = (self.X - self.col_mean) / self.col_scale
        return Xs, self.y - self.y_mean


@njit(cache=True)
def _cd_solve(G, c, lam, beta, tol, max_sweeps):  # pragma: no cover - jitted
    """Cyclic coordinate descent on (1/2) b'Gb - c'b + lam*|b|_1, in place."""
    p = G.shape[0]
    q = G @ beta
    last_delta = 0.0
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            z = beta[j] + (c[j] - q[j]) / gjj
            thr = lam / gjj
            if z > thr:
                new = z - thr
            elif z < -thr:
                new = z + thr
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                row = G[j]    # symmetric, row access keeps the scan contiguous
                for i in range(p):
                    q[i] += row[i] * delta
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        last_delta = max_delta
        if max_delta < tol:
            return sweep + 1, last_delta, True
    return max_sweeps, last_delta, False


@njit(cache=True)
def _cd_active(Gs, cs, lam, beta, tol, max_sweeps):  # pragma: no cover - jitted
    """Descent on a gathered candidate block; negative count if not converged."""
    p = Gs.shape[0]
    q = Gs @ beta
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            gjj = Gs[j, j]
            if gjj <= 0.0:
                continue
            z = beta[j] + (cs[j] - q[j]) / gjj
            thr = lam / gjj
            if z > thr:
                new = z - thr
            elif z < -thr:
                new = z + thr
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                row = Gs[j]
                for i in range(p):
                    q[i] += row[i] * delta
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        if max_delta < tol:
            return sweep + 1
    return -max_sweeps


@njit(cache=True)
def _grad_vector(G, c, beta):  # pragma: no cover - jitted
    """c - G @ beta, exploiting the sparsity of beta (G is symmetric)."""
    p = len(c)
    grad = c.copy()
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            row = G[j]
            for i in range(p):
                grad[i] -= row[i] * bj
    return grad


@njit(cache=True)
def _screened_solve(G, c, lam, lam_prev, beta, grad, tol,
                    max_sweeps):  # pragma: no cover - jitted
    """One penalty weight, restricted to strong-rule candidates.

    Candidates are the current support plus features whose gradient at
    the previous path point beats the sequential strong-rule threshold
    2*lam - lam_prev.  After the candidate block converges, the full
    gradient is refreshed and any screened-out feature violating its
    KKT bound (with slack 10*tol) is admitted and the block resolved.
    Returns (sweeps, converged); beta and grad are updated in place.
    """
    p = len(c)
    thr = 2.0 * lam - lam_prev
    include = np.zeros(p, np.bool_)
    for j in range(p):
        if beta[j] != 0.0 or abs(grad[j]) >= thr:
            include[j] = True
    slack = 10.0 * tol
    total = 0
    converged = True
    while True:
        idx = np.flatnonzero(include)
        nc = len(idx)
        if nc == 0:
            new_grad = _grad_vector(G, c, beta)
            for j in range(p):
                grad[j] = new_grad[j]
            break
        Gs = np.empty((nc, nc))
        for a in range(nc):
            row = G[idx[a]]
            for b in range(nc):
                Gs[a, b] = row[idx[b]]
        bs = beta[idx].copy()
        s = _cd_active(Gs, c[idx].copy(), lam, bs, tol, max_sweeps)
        if s < 0:
            converged = False
            s = -s
        total += s
        for a in range(nc):
            beta[idx[a]] = bs[a]
        new_grad = _grad_vector(G, c, beta)
        for j in range(p):
            grad[j] = new_grad[j]
        grew = False
        for j in range(p):
            if not include[j] and abs(grad[j]) > lam + slack:
                include[j] = True
                grew = True
        if not grew or not converged:
            break
    return total, converged


@njit(cache=True)
def _cd_path(G, c, lams, tol, max_sweeps):  # pragma: no cover - jitted
    """Warm-started, strong-rule-screened descent along a decreasing grid."""
    p = G.shape[0]
    m = len(lams)
    betas = np.zeros((m, p))
    sweeps = np.zeros(m, np.int64)
    converged = np.zeros(m, np.bool_)
    beta = np.zeros(p)
    grad = c.copy()
    for k in range(m):
        lam_prev = lams[k - 1] if k > 0 else lams[0]
        s, ok = _screened_solve(G, c, lams[k], lam_prev, beta, grad,
                                tol, max_sweeps)
        betas[k] = beta
        sweeps[k] = s
        converged[k] = ok
    return betas, sweeps, converged


def _destandardize(beta_std: np.ndarray, col_mean: np.ndarray,
                   col_scale: np.ndarray, y_mean: float,
                   lam: float, sweeps: int) -> FittedModel:
    coef = beta_std / col_scale
    intercept = y_mean - float(coef @ col_mean)
    return FittedModel(coef=coef, intercept=intercept, lam=float(lam),
                       sweeps=int(sweeps))


def lasso_fit(dm: DesignMatrix, lam: float, tol: float = CD_TOL,
              max_sweeps: int = CD_MAX_SWEEPS) -> FittedModel:
    """Solve (1/2n)|y - Xb|^2 + lam*|b|_1 on standardised columns.

    Converges when the largest coefficient change in a sweep drops
    below ``tol``; raises ConvergenceError (with sweep diagnostics)
    if ``max_sweeps`` full sweeps are not enough.
    """
    if lam < 0:
        raise ValueError(f"penalty must be non-negative, got {lam}")
    Xs, yc = dm.standardized()
    n = dm.rows
    G = np.ascontiguousarray(Xs.T @ Xs / n)
    c = np.ascontiguousarray(Xs.T @ yc / n)
    beta = np.zeros(Xs.shape[1])
    sweeps, last_delta, ok = _cd_solve(G, c, float(lam), beta, tol, max_sweeps)
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps "
            f"(last max coefficient change {last_delta:.3e}, tol {tol:.1e})",
            sweeps=sweeps, last_delta=last_delta)
    return _destandardize(beta, dm.col_mean, dm.col_scale, dm.y_mean, lam, sweeps)


def lambda_grid(lam_max: float, size: int = LAMBDA_GRID_SIZE,
                span: float = LAMBDA_GRID_SPAN) -> np.ndarray:
    """Geometric grid from lam_max down to span*lam_max."""
    if lam_max <= 0:
        raise ValueError("lambda grid needs a positive lam_max")
    return lam_max * span ** (np.arange(size) / (size - 1))


def _aic_scan(G: np.ndarray, c: np.ndarray, yty_n: float, n: int,
              max_sweeps: int, path_tol: float = PATH_TOL
              ) -> Tuple[np.ndarray, float, np.ndarray]:
    """Run the warm-started path at ``path_tol``, pick the AIC argmin.

    Returns (beta_std at the winner, lam, grid).
    """
    lam_max = float(np.max(np.abs(c))) if len(c) else 0.0
    if lam_max <= 0.0:
        # constant target: the all-zero model, lambda at its ceiling
        return np.zeros(G.shape[0]), 0.0, np.zeros(1)
    grid = lambda_grid(lam_max)
    betas, sweeps, converged = _cd_path(G, c, grid, path_tol, max_sweeps)
    if not np.all(converged):
        bad = int(np.argmin(converged))
        raise ConvergenceError(
            f"coordinate descent did not converge at lambda={grid[bad]:.6g} "
            f"within {max_sweeps} sweeps", sweeps=int(sweeps[bad]))
    # RSS/n = y'y/n - 2 c'b + b'Gb, all in centred-target units
    cross = betas @ c
    quad = ((betas @ G) * betas).sum(axis=1)
    rss_n = np.maximum(yty_n - 2.0 * cross + quad, 1e-300)
    k_nonzero = np.count_nonzero(betas, axis=1)
    aic = n * np.log(rss_n) + 2.0 * k_nonzero
    best = int(np.argmin(aic))
    return betas[best].copy(), float(grid[best]), grid


def _aic_fit(G: np.ndarray, c: np.ndarray, yty_n: float, n: int,
             tol: float, max_sweeps: int) -> Tuple[np.ndarray, float, int]:
    """Scan for the AIC winner, then solve it to ``tol``.

    The refit warm-starts from the scan's coefficients and is screened to
    the KKT-active set, so it costs a few sweeps rather than a full solve.
    Returns (beta_std, lam, refit sweeps).
    """
    beta, lam, _ = _aic_scan(G, c, yty_n, n, max_sweeps)
    if lam <= 0.0:
        return beta, lam, 1
    grad = _grad_vector(G, c, beta)
    sweeps, ok = _screened_solve(G, c, lam, lam, beta, grad, tol, max_sweeps)
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge at the selected "
            f"lambda={lam:.6g} within {max_sweeps} sweeps", sweeps=int(sweeps))
    return beta, lam, int(sweeps)


def select_lambda(dm: DesignMatrix,
                  max_sweeps: int = CD_MAX_SWEEPS) -> float:
    """AIC-selected penalty over a geometric grid with warm starts."""
    Xs, yc = dm.standardized()
    n = dm.rows
    G = np.ascontiguousarray(Xs.T @ Xs / n)
    c = np.ascontiguousarray(Xs.T @ yc / n)
    _, lam, _ = _aic_scan(G, c, float(yc @ yc / n), n, max_sweeps)
    return lam


def lasso_fit_aic(dm: DesignMatrix, tol: float = CD_TOL,
                  max_sweeps: int = CD_MAX_SWEEPS) -> FittedModel:
    """Fit at the AIC-selected penalty without refitting from scratch."""
    Xs, yc = dm.standardized()
    n = dm.rows
    G = np.ascontiguousarray(Xs.T @ Xs / n)
    c = np.ascontiguousarray(Xs.T @ yc / n)
    beta, lam, sweeps = _aic_fit(G, c, float(yc @ yc / n), n, tol, max_sweeps)
    return _destandardize(beta, dm.col_mean, dm.col_scale, dm.y_mean, lam, sweeps)


def lear_fit_all_hours(X: np.ndarray, targets: np.ndarray,
                       tol: float = CD_TOL, max_sweeps: int = CD_MAX_SWEEPS
                       ) -> List[FittedModel]:
    """Fit the 24 hourly LEAR models sharing one design matrix.

    The feature block is identical for every hour of a day, so the Gram
    matrix is computed once and only the correlation vector changes.
    Results match per-hour :func:`lasso_fit_aic` exactly.
    """
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 2 or targets.shape[1] != 24:
        raise ValueError(f"targets must be (rows, 24), got {targets.shape}")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets contain non-finite values")
    base = DesignMatrix(X, targets[:, 0])
    Xs, _ = base.standardized()
    n = base.rows
    G = np.ascontiguousarray(Xs.T @ Xs / n)
    models: List[FittedModel] = []
    for h in range(24):
        y = targets[:, h]
        y_mean = float(y.mean())
        yc = y - y_mean
        c = np.ascontiguousarray(Xs.T @ yc / n)
        beta, lam, sweeps = _aic_fit(G, c, float(yc @ yc / n), n, tol, max_sweeps)
        models.append(_destandardize(beta, base.col_mean, base.col_scale,
                                     y_mean, lam, sweeps))
    return models
