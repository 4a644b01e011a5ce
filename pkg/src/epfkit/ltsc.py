"""Long-term seasonal component (LTSC) estimation and next-day forecasts.

Two smoother families act on the flattened hourly price vector of a
calibration window:

* centred moving averages over 24*level+1 hours, level in
  {1, 7, 28, 56, 91} days, truncated symmetrically at the edges;
* wavelet low-pass approximations S_J for J in {5, 7, 9, 10, 11},
  keeping fluctuations slower than 2**J hours.

Both run on raw prices, before any variance stabilisation.

For the day ahead the LTSC is unknown.  The naive route copies the last
in-window day of the smoothed curve.  The extrapolated route appends a
24-hour base forecast (from a model without decomposition) to the
window, smooths the extended vector, and reads the target day off its
tail, so the smoother sees an (approximate) continuation instead of a
boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import wavelets

MA_LEVELS = (1, 7, 28, 56, 91)       # days
WAVELET_LEVELS = (5, 7, 9, 10, 11)   # octaves; scale = 2**J hours

HOURS = 24


@dataclass(frozen=True)
class LtscSpec:
    """One smoother: method "ma" (level in days) or "wavelet" (octaves)."""

    method: str
    level: int

    def __post_init__(self):
        if self.method == "ma":
            allowed = MA_LEVELS
        elif self.method == "wavelet":
            allowed = WAVELET_LEVELS
        else:
            raise ValueError(f"unknown LTSC method {self.method!r}")
        if self.level not in allowed:
            raise ValueError(f"{self.method} level must be one of {allowed}, "
                             f"got {self.level}")

    @property
    def label(self) -> str:
        return f"{'MA' if self.method == 'ma' else 'S'}{self.level}"


MA_SPECS = tuple(LtscSpec("ma", lv) for lv in MA_LEVELS)
WAVELET_SPECS = tuple(LtscSpec("wavelet", lv) for lv in WAVELET_LEVELS)
ALL_SPECS = MA_SPECS + WAVELET_SPECS


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Additive split price = ltsc + stochastic (exact by construction)."""

    ltsc: np.ndarray
    stochastic: np.ndarray

    @classmethod
    def split(cls, prices: np.ndarray, ltsc: np.ndarray) -> "Decomposition":
        return cls(ltsc=ltsc, stochastic=np.asarray(prices, dtype=float) - ltsc)


def centered_mean(x: np.ndarray, half_width: int) -> np.ndarray:
    """Mean over [t-k, t+k], truncated to available samples at the edges."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    k = int(half_width)
    if k < 1:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if n < 2 * k + 1:
        raise ValueError(f"signal of length {n} shorter than the "
                         f"{2 * k + 1}-sample smoothing window")
    csum = np.concatenate([[0.0], np.cumsum(x)])
    t = np.arange(n)
    lo = np.maximum(t - k, 0)
    hi = np.minimum(t + k, n - 1)
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


def ma_smooth(x: np.ndarray, level_days: int) -> np.ndarray:
    """Centred moving average with a 24*level_days + 1 hour window."""
    return centered_mean(x, 12 * int(level_days))


def wavelet_smooth(x: np.ndarray, levels: int) -> np.ndarray:
    """Wavelet approximation S_J: zero all detail bands up to ``levels``."""
    return wavelets.smooth(x, int(levels))


def extract(x: np.ndarray, spec: LtscSpec) -> np.ndarray:
    if spec.method == "ma":
        return ma_smooth(x, spec.level)
    return wavelet_smooth(x, spec.level)


def _flatten(window_prices: np.ndarray) -> np.ndarray:
    arr = np.asarray(window_prices, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != HOURS:
            raise ValueError(f"expected 24 hourly columns, got {arr.shape}")
        return arr.ravel()
    if arr.ndim == 1:
        if len(arr) % HOURS != 0:
            raise ValueError("flat price vector length is not a multiple of 24")
        return arr
    raise ValueError(f"window prices must be 1-d or 2-d, got shape {arr.shape}")


def naive_ltsc_forecast(window_prices: np.ndarray,
                        spec: LtscSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Smooth the window and copy its last day as the target-day LTSC.

    Returns (in_window_ltsc flattened, t_hat of length 24).
    """
    flat = _flatten(window_prices)
    curve = extract(flat, spec)
    return curve, curve[-HOURS:].copy()


def extrapolated_ltsc(window_prices: np.ndarray, base_forecast: np.ndarray,
                      spec: LtscSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Extend the window with a 24-hour base forecast, then smooth.

    The smoothed curve over the original window is returned together
    with its final 24 values, which now genuinely belong to the target
    day, preserving LTSC continuity across the forecast boundary.
    """
    flat = _flatten(window_prices)
    base_forecast = np.asarray(base_forecast, dtype=float).ravel()
    if len(base_forecast) != HOURS:
        raise ValueError(f"base forecast must hold 24 hours, got {len(base_forecast)}")
    if not np.all(np.isfinite(base_forecast)):
        raise ValueError("base forecast contains non-finite values")
    extended = np.concatenate([flat, base_forecast])
    curve = extract(extended, spec)
    return curve[:len(flat)], curve[-HOURS:].copy()
