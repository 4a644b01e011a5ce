"""Day-ahead battery arbitrage: one buy hour and one sell hour per day.

Each day the battery buys ``trade_volume`` MWh at one hour and sells at
another, losing ``efficiency`` on each leg, so a trade pays
``volume * (eff * price_sell - price_buy / eff)``.  The benchmark picks
the true cheapest and dearest hours; a model strategy picks them from
its forecast but settles at the actual prices.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError

HOURS = 24


@dataclass(frozen=True)
class BatterySpec:
    """Storage parameters; the default trade volume is the usable band."""

    capacity_mwh: float = 1.25
    min_level_mwh: float = 0.25
    efficiency: float = 0.9
    trade_volume_mwh: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.min_level_mwh >= self.capacity_mwh:
            raise ValueError("minimum level must lie below capacity")
        if self.trade_volume_mwh is None:
            object.__setattr__(self, "trade_volume_mwh",
                               self.capacity_mwh - self.min_level_mwh)
        if self.trade_volume_mwh <= 0:
            raise ValueError("trade volume must be positive")


@dataclass(frozen=True)
class DayTrade:
    """One executed (or skipped) daily trade; hours are 1-based."""

    h1: Optional[int]      # buy hour, 1..24
    h2: Optional[int]      # sell hour, 1..24
    profit: float
    traded: bool = True


def _check_day(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    if len(values) != HOURS:
        raise ValueError(f"{what} must hold 24 hourly values, got {len(values)}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")
    return values


def _pair_profit(prices: np.ndarray, h1: int, h2: int, spec: BatterySpec) -> float:
    eff = spec.efficiency
    return spec.trade_volume_mwh * (eff * prices[h2] - prices[h1] / eff)


def _best_ordered_pair(values: np.ndarray, spec: BatterySpec) -> Tuple[int, int]:
    """Highest-paying (buy, sell) pair with buy strictly before sell."""
    best = (0, 1)
    best_profit = -np.inf
    for h1 in range(HOURS - 1):
        for h2 in range(h1 + 1, HOURS):
            p = _pair_profit(values, h1, h2, spec)
            if p > best_profit:
                best_profit = p
                best = (h1, h2)
    return best


def crystal_ball_profit(day_prices: np.ndarray, spec: BatterySpec = BatterySpec(),
                        require_charge_first: bool = False) -> DayTrade:
    """Buy at the day's true cheapest hour, sell at its dearest.

    Ties resolve to the earliest hour.  With ``require_charge_first``
    the buy must precede the sell, searched by enumeration.
    """
    prices = _check_day(day_prices, "prices")
    if require_charge_first:
        h1, h2 = _best_ordered_pair(prices, spec)
    else:
        h1 = int(np.argmin(prices))
        h2 = int(np.argmax(prices))
    return DayTrade(h1=h1 + 1, h2=h2 + 1,
                    profit=_pair_profit(prices, h1, h2, spec))


def strategy_profit(day_prices: np.ndarray, day_forecasts: np.ndarray,
                    spec: BatterySpec = BatterySpec(),
                    require_charge_first: bool = False) -> DayTrade:
    """Pick hours from the forecast, settle at the actual prices.

    A flat forecast gives no usable ordering, so no trade happens and
    the day is flagged.
    """
    prices = _check_day(day_prices, "prices")
    forecasts = _check_day(day_forecasts, "forecasts")
    if np.all(forecasts == forecasts[0]):
        return DayTrade(h1=None, h2=None, profit=0.0, traded=False)
    if require_charge_first:
        h1, h2 = _best_ordered_pair(forecasts, spec)
    else:
        h1 = int(np.argmin(forecasts))
        h2 = int(np.argmax(forecasts))
    return DayTrade(h1=h1 + 1, h2=h2 + 1,
                    profit=_pair_profit(prices, h1, h2, spec))


@dataclass
class ProfitSummary:
    """Per-variant trading outcome over the test period."""

    trades: List[Optional[DayTrade]]     # None where the forecast was missing
    total: float
    fraction: float                      # of the crystal-ball total
    skipped_days: int


@dataclass
class ProfitReport:
    dates: Tuple[dt.date, ...]
    cb_trades: List[DayTrade]
    cb_total: float
    variants: Dict[str, ProfitSummary] = field(default_factory=dict)


def aggregate_profits(actual: np.ndarray,
                      forecasts_by_variant: Mapping[str, np.ndarray],
                      dates: Sequence[dt.date],
                      spec: BatterySpec = BatterySpec(),
                      require_charge_first: bool = False) -> ProfitReport:
    """Total strategy profit per variant, normalised by the benchmark.

    Days whose forecast has any missing hour are skipped (no trade) and
    counted; the benchmark total spans the full period.
    """
    actual = np.asarray(actual, dtype=float)
    if actual.ndim != 2 or actual.shape[1] != HOURS:
        raise ValueError(f"actual prices must be (days, 24), got {actual.shape}")
    if len(dates) != actual.shape[0]:
        raise ValueError("dates and price rows disagree")
    if not np.all(np.isfinite(actual)):
        raise DataError("actual prices contain non-finite values")

    cb_trades = [crystal_ball_profit(actual[d], spec, require_charge_first)
                 for d in range(actual.shape[0])]
    cb_total = float(sum(t.profit for t in cb_trades))
    if cb_total <= 0.0:
        raise DataError(f"benchmark profit is {cb_total:.2f}; "
                        "cannot express strategies as a fraction of it")

    report = ProfitReport(dates=tuple(dates), cb_trades=cb_trades,
                          cb_total=cb_total)
    for label, fc in forecasts_by_variant.items():
        fc = np.asarray(fc, dtype=float)
        if fc.shape != actual.shape:
            raise ValueError(f"{label}: forecast shape {fc.shape} does not "
                             f"match prices {actual.shape}")
        trades: List[Optional[DayTrade]] = []
        total = 0.0
        skipped = 0
        for d in range(actual.shape[0]):
            if not np.all(np.isfinite(fc[d])):
                trades.append(None)
                skipped += 1
                continue
            trade = strategy_profit(actual[d], fc[d], spec, require_charge_first)
            trades.append(trade)
            total += trade.profit
        report.variants[label] = ProfitSummary(
            trades=trades, total=total, fraction=total / cb_total,
            skipped_days=skipped)
    return report
