"""Synthetic hourly market data for tests and demos.

Prices are built from a slow annual-period sinusoid, fixed daily and
weekly shapes, a linear response to the generated load and renewable
series, and stationary AR(1) noise.  Everything is driven by one seeded
generator, so a given parameter set reproduces bit-identically.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .timeseries import HourlyPanel

HOURS = 24


@dataclass(frozen=True)
class SynthParams:
    days: int = 750
    seed: int = 0
    start: dt.date = dt.date(2018, 1, 1)

    base_price: float = 45.0
    trend_amplitude: float = 25.0        # EUR/MWh, annual sinusoid
    trend_period_days: float = 365.0
    trend_phase: float = 0.0
    daily_amplitude: float = 9.0
    weekly_amplitude: float = 4.0

    ar_coeff: float = 0.7                # price noise persistence
    noise_scale: float = 2.5             # price AR(1) innovation std

    load_base: float = 1000.0
    load_daily: float = 150.0
    load_annual: float = 80.0
    load_noise: float = 30.0
    res_base: float = 300.0
    res_daily: float = 100.0
    res_noise: float = 40.0
    load_coeff: float = 0.03             # EUR/MWh per MW of load deviation
    res_coeff: float = -0.05             # negative: more renewables, lower price

    def __post_init__(self):
        if self.days < 1:
            raise ValueError("need at least one day")
        if not 0.0 <= self.ar_coeff < 1.0:
            raise ValueError("AR coefficient must lie in [0, 1)")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["start"] = self.start.isoformat()
        return out


def _ar1(rng: np.random.Generator, n: int, coeff: float, scale: float) -> np.ndarray:
    eps = rng.normal(0.0, scale, n)
    out = np.empty(n)
    prev = 0.0
    for i in range(n):
        prev = coeff * prev + eps[i]
        out[i] = prev
    return out


def generate(params: SynthParams) -> HourlyPanel:
    rng = np.random.default_rng(params.seed)
    n = params.days * HOURS
    t = np.arange(n, dtype=float)
    hour = t % HOURS
    year_hours = 24.0 * params.trend_period_days

    trend = params.trend_amplitude * np.sin(
        2 * np.pi * t / year_hours + params.trend_phase)
    daily = params.daily_amplitude * (
        np.sin(2 * np.pi * (hour - 9.0) / 24.0)
        + 0.4 * np.sin(4 * np.pi * (hour - 9.0) / 24.0))
    weekly = params.weekly_amplitude * np.sin(2 * np.pi * t / (24.0 * 7.0))

    load = (params.load_base
            + params.load_daily * np.sin(2 * np.pi * (hour - 8.0) / 24.0)
            + params.load_annual * np.sin(2 * np.pi * t / year_hours + 1.0)
            + rng.normal(0.0, params.load_noise, n))
    res = (params.res_base
           + params.res_daily * np.sin(2 * np.pi * (hour - 4.0) / 24.0)
           + rng.normal(0.0, params.res_noise, n))

    noise = _ar1(rng, n, params.ar_coeff, params.noise_scale)
    price = (params.base_price + trend + daily + weekly
             + params.load_coeff * (load - params.load_base)
             + params.res_coeff * (res - params.res_base)
             + noise)

    shape = (params.days, HOURS)
    return HourlyPanel(start_date=params.start,
                       price=price.reshape(shape),
                       load_da=load.reshape(shape),
                       res_da=res.reshape(shape))


def write_sidecar(params: SynthParams, path) -> None:
    """Record every generation parameter next to the data file."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
