"""Robust variance-stabilising transform for price-like series.

Electricity prices show heavy tails and occasional negative values, so
series are mapped through an area-hyperbolic sine after robust
centring and scaling:

    transformed = asinh((value - median) / (1.4826 * MAD))

with median and MAD taken over the calibration window.  1.4826 scales
the MAD to the standard deviation of a normal sample.  The inverse
applies sinh and undoes the affine map; no bias correction is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWindowError

MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class Normalizer:
    """Frozen location/scale pair estimated from one calibration window."""

    median: float
    mad: float

    @property
    def scale(self) -> float:
        return MAD_TO_SIGMA * self.mad

    @property
    def degenerate(self) -> bool:
        return self.mad == 0.0


def fit(values: np.ndarray) -> Normalizer:
    """Estimate median and median absolute deviation of ``values``.

    An empty input raises ValueError; a window whose MAD is zero is
    still returned (flagged degenerate) so the caller can decide how to
    report it.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("cannot fit a normalizer to an empty window")
    if not np.all(np.isfinite(values)):
        raise ValueError("window contains non-finite values")
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    return Normalizer(median=med, mad=mad)


def transform(values: np.ndarray, norm: Normalizer) -> np.ndarray:
    """asinh-stabilise ``values`` with the window statistics in ``norm``."""
    if norm.degenerate:
        raise DegenerateWindowError(
            "normalizer has MAD = 0; the calibration window is constant")
    values = np.asarray(values, dtype=float)
    return np.arcsinh((values - norm.median) / norm.scale)


def inverse(transformed: np.ndarray, norm: Normalizer) -> np.ndarray:
    """Map stabilised values back to the original unit."""
    if norm.degenerate:
        raise DegenerateWindowError(
            "normalizer has MAD = 0; the calibration window is constant")
    transformed = np.asarray(transformed, dtype=float)
    return norm.scale * np.sinh(transformed) + norm.median
