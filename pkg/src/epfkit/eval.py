"""Forecast accuracy metrics and the forecast-comparison z-test.

All comparisons treat NaN cells pairwise: a cell enters a metric only
if it is finite in both series being compared, and day-level tests drop
any day with a missing hour in either contestant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

import numpy as np
from scipy.stats import norm

from .errors import DataError

ROLLING_WINDOW_DAYS = 365
MIN_DM_DAYS = 30


def _as_day_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != 24:
        raise ValueError(f"expected (days, 24), got {x.shape}")
    return x


def _pair_mask(actual: np.ndarray, forecast: np.ndarray) -> np.ndarray:
    if actual.shape != forecast.shape:
        raise ValueError(f"shape mismatch {actual.shape} vs {forecast.shape}")
    return np.isfinite(actual) & np.isfinite(forecast)


def mae(actual: np.ndarray, forecast: np.ndarray) -> float:
    """Mean absolute error over cells finite in both matrices."""
    actual = _as_day_matrix(actual)
    forecast = _as_day_matrix(forecast)
    mask = _pair_mask(actual, forecast)
    if not mask.any():
        raise DataError("no overlapping finite cells to score")
    return float(np.mean(np.abs(actual[mask] - forecast[mask])))


def rmse(actual: np.ndarray, forecast: np.ndarray) -> float:
    """Root mean square error over cells finite in both matrices."""
    actual = _as_day_matrix(actual)
    forecast = _as_day_matrix(forecast)
    mask = _pair_mask(actual, forecast)
    if not mask.any():
        raise DataError("no overlapping finite cells to score")
    return float(np.sqrt(np.mean((actual[mask] - forecast[mask]) ** 2)))


def excluded_days(actual: np.ndarray, forecast: np.ndarray) -> int:
    """Days dropped from a pairwise comparison (any missing hour)."""
    mask = _pair_mask(_as_day_matrix(actual), _as_day_matrix(forecast))
    return int(np.sum(~mask.all(axis=1)))


def daily_errors(actual: np.ndarray, forecast: np.ndarray) -> np.ndarray:
    """Per-cell error actual - forecast, NaN wherever either side is."""
    actual = _as_day_matrix(actual)
    forecast = _as_day_matrix(forecast)
    mask = _pair_mask(actual, forecast)
    eps = np.where(mask, actual - forecast, np.nan)
    return eps


def rmae_rolling(model_errors: np.ndarray, benchmark_errors: np.ndarray,
                 window: int = ROLLING_WINDOW_DAYS) -> np.ndarray:
    """Trailing-window MAE of a model relative to a benchmark.

    Element delta of the result compares the ``window`` days ending at
    day delta-1; the series has len - window + 1 entries.  Cells enter
    only when finite in both error series.
    """
    me = _as_day_matrix(model_errors)
    be = _as_day_matrix(benchmark_errors)
    if me.shape != be.shape:
        raise ValueError(f"shape mismatch {me.shape} vs {be.shape}")
    n = me.shape[0]
    if n < window:
        raise DataError(f"rolling window needs {window} days, have {n}")
    mask = np.isfinite(me) & np.isfinite(be)
    m_abs = np.where(mask, np.abs(me), 0.0).sum(axis=1)
    b_abs = np.where(mask, np.abs(be), 0.0).sum(axis=1)
    counts = mask.sum(axis=1).astype(float)

    def _window_sums(daily: np.ndarray) -> np.ndarray:
        cs = np.concatenate([[0.0], np.cumsum(daily)])
        return cs[window:] - cs[:-window]

    cnt = _window_sums(counts)
    if np.any(cnt == 0):
        raise DataError("a rolling span holds no scoreable cells")
    m_mae = _window_sums(m_abs) / cnt
    b_mae = _window_sums(b_abs) / cnt
    if np.any(b_mae == 0.0):
        raise DataError("benchmark MAE is zero inside a rolling span")
    return m_mae / b_mae


@dataclass(frozen=True)
class DmResult:
    """One-sided z-test on the daily loss differential of two models."""

    statistic: float
    p_value: float
    n_days: int


def dm_test(errors_a: np.ndarray, errors_b: np.ndarray, r: int = 1) -> DmResult:
    """Compare two day-ahead error matrices via their daily loss norms.

    The differential is ||eps_a_d||_r - ||eps_b_d||_r per day; the
    statistic is sqrt(N) * mean / sample std.  Small p-values say the
    second model is significantly better than the first.
    """
    ea = _as_day_matrix(errors_a)
    eb = _as_day_matrix(errors_b)
    if ea.shape != eb.shape:
        raise ValueError(f"shape mismatch {ea.shape} vs {eb.shape}")
    common = np.isfinite(ea).all(axis=1) & np.isfinite(eb).all(axis=1)
    n = int(common.sum())
    if n < MIN_DM_DAYS:
        raise DataError(f"need at least {MIN_DM_DAYS} common days, have {n}")
    if r == 1:
        na = np.abs(ea[common]).sum(axis=1)
        nb = np.abs(eb[common]).sum(axis=1)
    else:
        na = (np.abs(ea[common]) ** r).sum(axis=1) ** (1.0 / r)
        nb = (np.abs(eb[common]) ** r).sum(axis=1) ** (1.0 / r)
    delta = na - nb
    if np.all(delta == 0.0):
        raise DataError("loss differential is identically zero; "
                        "the forecasts coincide on every common day")
    std = float(delta.std(ddof=1))
    mean = float(delta.mean())
    if std == 0.0:
        stat = np.inf if mean > 0 else -np.inf
    else:
        stat = np.sqrt(n) * mean / std
    return DmResult(statistic=float(stat), p_value=float(norm.sf(stat)), n_days=n)


def dm_matrix(errors_by_variant: Mapping[str, np.ndarray], r: int = 1
              ) -> Tuple[List[str], np.ndarray]:
    """All ordered pairwise tests; entry [i, j] small means j beats i."""
    labels = list(errors_by_variant)
    if len(labels) < 2:
        raise ValueError("need at least two variants to compare")
    k = len(labels)
    P = np.full((k, k), np.nan)
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            if i == j:
                continue
            P[i, j] = dm_test(errors_by_variant[a], errors_by_variant[b], r).p_value
    return labels, P
