"""Hourly market data: ingestion, DST repair, panels and rolling windows.

Raw day-ahead exports carry local wall-clock timestamps, so every year
has one day with a missing hour (spring transition) and one with a
duplicated hour (autumn).  Ingestion repairs both structurally, without
any time-zone database: a single missing hour is filled with the
arithmetic mean of its two neighbours, a duplicated hour is replaced by
the mean of the duplicates, and anything worse (two or more consecutive
missing hours, triplicated stamps) is rejected.  The same rule is
applied to prices, load and RES forecasts alike.

The result is a dense (days x 24) grid; day d hour 0 covers local
00:00-01:00 of the d-th calendar date.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DataError

TIMESTAMP_FMT = "%Y-%m-%d %H:%M"
PANEL_HEADER = ["timestamp", "price", "load_da", "res_da"]

Record = Tuple[dt.datetime, float, float, float]


@dataclass(frozen=True, eq=False)
class RepairEvent:
    kind: str                 # "missing_filled" or "duplicate_merged"
    timestamp: dt.datetime

    def __str__(self) -> str:
        return f"{self.kind} at {self.timestamp.strftime(TIMESTAMP_FMT)}"


@dataclass(frozen=True, eq=False)
class HourlyPanel:
    """Dense hourly grid of prices and day-ahead fundamentals."""

    start_date: dt.date
    price: np.ndarray     # (days, 24)
    load_da: np.ndarray   # (days, 24)
    res_da: np.ndarray    # (days, 24)

    def __post_init__(self):
        for name in ("price", "load_da", "res_da"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[1] != 24:
                raise ValueError(f"{name} must have shape (days, 24), got {arr.shape}")
            if arr.shape != self.price.shape:
                raise ValueError("price/load_da/res_da shapes disagree")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains non-finite values after ingestion")
            arr.setflags(write=False)

    @property
    def days(self) -> int:
        return self.price.shape[0]

    def date_of(self, day: int) -> dt.date:
        return self.start_date + dt.timedelta(days=int(day))

    def index_of(self, date: dt.date) -> int:
        idx = (date - self.start_date).days
        if not 0 <= idx < self.days:
            raise DataError(f"date {date} outside the panel ({self.start_date} .. "
                            f"{self.date_of(self.days - 1)})")
        return idx

    def day_of_week(self, day: int) -> int:
        """0 = Monday .. 6 = Sunday, derived from start_date."""
        return (self.start_date.weekday() + int(day)) % 7


def panels_equal(a: HourlyPanel, b: HourlyPanel) -> bool:
    return (a.start_date == b.start_date
            and a.price.shape == b.price.shape
            and np.array_equal(a.price, b.price)
            and np.array_equal(a.load_da, b.load_da)
            and np.array_equal(a.res_da, b.res_da))


def _merge_duplicates(records: Sequence[Record],
                      repairs: List[RepairEvent]) -> List[Record]:
    merged: List[Record] = []
    i = 0
    while i < len(records):
        t = records[i][0]
        j = i
        while j + 1 < len(records) and records[j + 1][0] == t:
            j += 1
        count = j - i + 1
        if count == 1:
            merged.append(records[i])
        elif count == 2:
            a, b = records[i], records[j]
            merged.append((t, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0,
                           (a[3] + b[3]) / 2.0))
            repairs.append(RepairEvent("duplicate_merged", t))
        else:
            raise DataError(f"timestamp {t.strftime(TIMESTAMP_FMT)} appears "
                            f"{count} times; at most one duplicate is repairable")
        i = j + 1
    return merged


def _fill_gaps(records: Sequence[Record],
               repairs: List[RepairEvent]) -> List[Record]:
    out: List[Record] = [records[0]]
    hour = dt.timedelta(hours=1)
    for rec in records[1:]:
        prev = out[-1]
        delta = rec[0] - prev[0]
        if delta <= dt.timedelta(0):
            raise DataError(f"records not sorted near "
                            f"{rec[0].strftime(TIMESTAMP_FMT)}")
        if delta % hour != dt.timedelta(0):
            raise DataError(f"sub-hourly spacing before "
                            f"{rec[0].strftime(TIMESTAMP_FMT)}")
        gap = delta // hour
        if gap == 2:
            t_miss = prev[0] + hour
            out.append((t_miss, (prev[1] + rec[1]) / 2.0,
                        (prev[2] + rec[2]) / 2.0, (prev[3] + rec[3]) / 2.0))
            repairs.append(RepairEvent("missing_filled", t_miss))
        elif gap > 2:
            raise DataError(
                f"{gap - 1} consecutive hours missing before "
                f"{rec[0].strftime(TIMESTAMP_FMT)}; only single missing hours "
                f"are repairable")
        out.append(rec)
    return out


def ingest_with_repairs(records: Iterable[Record]) -> Tuple[HourlyPanel, List[RepairEvent]]:
    """Repair DST artefacts and grid the records into an HourlyPanel."""
    records = list(records)
    if not records:
        raise DataError("no records to ingest")
    repairs: List[RepairEvent] = []
    merged = _merge_duplicates(records, repairs)
    filled = _fill_gaps(merged, repairs)
    first, last = filled[0][0], filled[-1][0]
    if first.hour != 0 or first.minute != 0:
        raise DataError(f"series must start at hour 00, got "
                        f"{first.strftime(TIMESTAMP_FMT)}")
    if last.hour != 23:
        raise DataError(f"series must end at hour 23, got "
                        f"{last.strftime(TIMESTAMP_FMT)}")
    n = len(filled)
    if n % 24 != 0:
        raise DataError(f"{n} hourly records do not form whole days")
    days = n // 24
    grid = np.array([rec[1:] for rec in filled], dtype=float)
    panel = HourlyPanel(
        start_date=first.date(),
        price=grid[:, 0].reshape(days, 24),
        load_da=grid[:, 1].reshape(days, 24),
        res_da=grid[:, 2].reshape(days, 24),
    )
    return panel, repairs


def ingest(records: Iterable[Record]) -> HourlyPanel:
    return ingest_with_repairs(records)[0]


def read_panel_csv(path) -> Tuple[HourlyPanel, List[RepairEvent]]:
    """Parse, repair and grid a ``timestamp,price,load_da,res_da`` file."""
    records: List[Record] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [c.strip() for c in header] != PANEL_HEADER:
            raise DataError(f"{path}: expected header "
                            f"{','.join(PANEL_HEADER)!r}, got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path} line {lineno}: expected 4 fields, got {len(row)}")
            try:
                ts = dt.datetime.strptime(row[0].strip(), TIMESTAMP_FMT)
            except ValueError as exc:
                raise DataError(f"{path} line {lineno}: bad timestamp {row[0]!r}") from exc
            if ts.minute != 0:
                raise DataError(f"{path} line {lineno}: timestamps must fall on the hour")
            try:
                vals = tuple(float(v) for v in row[1:])
            except ValueError as exc:
                raise DataError(f"{path} line {lineno}: non-numeric value") from exc
            records.append((ts, *vals))
    return ingest_with_repairs(records)


def write_panel_csv(panel: HourlyPanel, path) -> None:
    """Emit a panel in the ingestion format; round-trips bit-for-bit."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PANEL_HEADER)
        base = dt.datetime.combine(panel.start_date, dt.time(0))
        flat = np.column_stack([panel.price.ravel(), panel.load_da.ravel(),
                                panel.res_da.ravel()])
        for i in range(flat.shape[0]):
            ts = base + dt.timedelta(hours=i)
            writer.writerow([ts.strftime(TIMESTAMP_FMT),
                             repr(float(flat[i, 0])),
                             repr(float(flat[i, 1])),
                             repr(float(flat[i, 2]))])


@dataclass(frozen=True)
class CalibrationWindow:
    """A contiguous block of history used to forecast the following day."""

    first_day: int   # inclusive, 0-based panel day index
    last_day: int    # inclusive

    def __post_init__(self):
        if self.first_day < 0 or self.last_day < self.first_day:
            raise ValueError(f"invalid window [{self.first_day}, {self.last_day}]")

    @property
    def length(self) -> int:
        return self.last_day - self.first_day + 1

    @property
    def target_day(self) -> int:
        return self.last_day + 1

    def training_view(self, panel: HourlyPanel) -> "WindowView":
        """Slice out everything a forecaster may legally see.

        Prices stop at the window's last day; the fundamentals extend
        one day further because day-ahead load/RES forecasts for the
        target day are published before the auction.
        """
        if self.target_day >= panel.days:
            raise ValueError(f"target day {self.target_day} is outside the panel")
        lo, hi = self.first_day, self.last_day + 1
        dows = np.array([panel.day_of_week(d) for d in range(lo, hi + 1)], dtype=np.int64)
        return WindowView(
            price=panel.price[lo:hi],
            load=panel.load_da[lo:hi + 1],
            res=panel.res_da[lo:hi + 1],
            dows=dows,
            target_date=panel.date_of(self.target_day),
        )


@dataclass(frozen=True, eq=False)
class WindowView:
    """Data visible when forecasting one target day.

    ``price`` has T rows (the calibration window); ``load``/``res``/
    ``dows`` have T+1 rows, the last being the target day.
    """

    price: np.ndarray
    load: np.ndarray
    res: np.ndarray
    dows: np.ndarray
    target_date: dt.date

    @property
    def window_days(self) -> int:
        return self.price.shape[0]


def rolling_windows(panel: HourlyPanel, length_days: int,
                    first_target: int, last_target: int) -> List[CalibrationWindow]:
    """Daily-shifted calibration windows for target days first..last.

    Each window holds the ``length_days`` days immediately preceding its
    target.  Raises if the panel cannot supply a full window for the
    first target or if a target falls outside the panel.
    """
    if length_days < 8:
        raise ValueError("window must span at least 8 days to supply weekly lags")
    if first_target > last_target:
        raise ValueError(f"empty target range {first_target}..{last_target}")
    if first_target - length_days < 0:
        raise DataError(
            f"history too short: target day {first_target} needs a "
            f"{length_days}-day window but only {first_target} days precede it")
    if last_target >= panel.days:
        raise DataError(f"target day {last_target} beyond panel end "
                        f"(have {panel.days} days)")
    return [CalibrationWindow(t - length_days, t - 1)
            for t in range(first_target, last_target + 1)]
