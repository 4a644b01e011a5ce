"""Delimited report files: forecasts, accuracy tables, test matrices, profits.

All files are UTF-8 CSV with a header row and ``.`` decimals.  Floats
are written with ``repr`` so a read-back reproduces them bit-exactly.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import eval as evaluation
from .errors import DataError
from .pipeline import ForecastMatrix, VariantId
from .trading import ProfitReport

FORECAST_HEADER = ("date", "hour", "variant", "forecast")


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# forecasts.csv
# ---------------------------------------------------------------------------

def write_forecast_header(fh) -> None:
    csv.writer(fh).writerow(FORECAST_HEADER)


def append_forecast_cell(fh, date: dt.date, variant: str,
                         values: np.ndarray) -> None:
    """One (day, variant) cell: 24 rows in hour order."""
    values = np.asarray(values, dtype=float)
    if values.shape != (24,):
        raise ValueError(f"cell must hold 24 hours, got {values.shape}")
    writer = csv.writer(fh)
    iso = date.isoformat()
    for hour in range(24):
        writer.writerow((iso, hour, variant, _fmt(values[hour])))


@dataclass
class ForecastSet:
    """Contents of a forecasts.csv, cell-complete and cell-partial alike."""

    dates: Tuple[dt.date, ...]                       # sorted unique
    variants: Tuple[str, ...]                        # first-seen order
    cells: Dict[Tuple[dt.date, str], np.ndarray]     # complete 24-hour cells

    def by_variant(self) -> Dict[str, np.ndarray]:
        """(days, 24) array per variant, NaN where a cell is absent."""
        out = {}
        index = {d: i for i, d in enumerate(self.dates)}
        for v in self.variants:
            arr = np.full((len(self.dates), 24), np.nan)
            for (date, label), values in self.cells.items():
                if label == v:
                    arr[index[date]] = values
            out[v] = arr
        return out


def read_forecasts_csv(path) -> ForecastSet:
    """Parse a forecast file; the last row wins on duplicate keys.

    Only cells with all 24 hours present are returned; partial cells
    (e.g. from an interrupted run) are dropped so they get recomputed.
    """
    hours: Dict[Tuple[dt.date, str], Dict[int, float]] = {}
    variants: List[str] = []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FORECAST_HEADER:
            raise DataError(f"{path}: expected header {','.join(FORECAST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0])
                hour = int(row[1])
                value = float(row[3])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not 0 <= hour < 24:
                raise DataError(f"{path}:{lineno}: hour must be 0..23, got {hour}")
            label = row[2]
            if label not in variants:
                variants.append(label)
            hours.setdefault((date, label), {})[hour] = value
    cells = {key: np.array([hv[h] for h in range(24)])
             for key, hv in hours.items() if len(hv) == 24}
    dates = tuple(sorted({d for d, _ in hours}))
    return ForecastSet(dates=dates, variants=tuple(variants), cells=cells)


def write_forecast_matrix(path, matrix: ForecastMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_forecast_header(fh)
        for d, date in enumerate(matrix.dates):
            for v, label in enumerate(matrix.variants):
                append_forecast_cell(fh, date, label, matrix.values[v, d])


# ---------------------------------------------------------------------------
# metrics.csv
# ---------------------------------------------------------------------------

def _sc_twin(label: str) -> Optional[str]:
    """The naive-seasonal counterpart an extrapolated variant is judged against."""
    try:
        vid = VariantId.from_label(label)
    except ValueError:
        return None
    if vid.decomposition != "eSC":
        return None
    return VariantId(vid.model_class, "SC", vid.pool).label


def compute_metric_rows(actual: np.ndarray,
                        by_variant: Mapping[str, np.ndarray]
                        ) -> List[Dict[str, object]]:
    """MAE/RMSE per variant plus percent change against the naive twin."""
    scores: Dict[str, Tuple[float, float]] = {}
    rows: List[Dict[str, object]] = []
    for label, fc in by_variant.items():
        try:
            scores[label] = (evaluation.mae(actual, fc),
                             evaluation.rmse(actual, fc))
        except DataError:
            scores[label] = (math.nan, math.nan)
    for label, fc in by_variant.items():
        m, r = scores[label]
        row: Dict[str, object] = {
            "variant": label, "mae": m, "rmse": r,
            "mae_vs_sc_pct": None, "rmse_vs_sc_pct": None,
            "excluded_days": evaluation.excluded_days(actual, fc),
        }
        twin = _sc_twin(label)
        if twin in scores:
            tm, tr = scores[twin]
            if tm and math.isfinite(tm):
                row["mae_vs_sc_pct"] = 100.0 * (m - tm) / tm
            if tr and math.isfinite(tr):
                row["rmse_vs_sc_pct"] = 100.0 * (r - tr) / tr
        rows.append(row)
    return rows


def write_metrics_csv(path, rows: Sequence[Mapping[str, object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("variant", "mae", "rmse",
                         "mae_vs_sc_pct", "rmse_vs_sc_pct", "excluded_days"))
        for row in rows:
            writer.writerow((
                row["variant"], _fmt(row["mae"]), _fmt(row["rmse"]),
                "" if row["mae_vs_sc_pct"] is None else _fmt(row["mae_vs_sc_pct"]),
                "" if row["rmse_vs_sc_pct"] is None else _fmt(row["rmse_vs_sc_pct"]),
                int(row["excluded_days"]),
            ))


# ---------------------------------------------------------------------------
# dm_pvalues.csv: small p at (row, col) means the column model beats the row
# ---------------------------------------------------------------------------

def write_dm_csv(path, labels: Sequence[str], pvalues: np.ndarray) -> None:
    pvalues = np.asarray(pvalues, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("row_variant", "col_variant", "p_value"))
        for i, a in enumerate(labels):
            for j, b in enumerate(labels):
                if i != j:
                    writer.writerow((a, b, _fmt(pvalues[i, j])))


def read_dm_csv(path) -> Tuple[List[str], np.ndarray]:
    entries: Dict[Tuple[str, str], float] = {}
    labels: List[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if not row:
                continue
            a, b, p = row
            for lb in (a, b):
                if lb not in labels:
                    labels.append(lb)
            entries[(a, b)] = float(p)
    P = np.full((len(labels), len(labels)), np.nan)
    for (a, b), p in entries.items():
        P[labels.index(a), labels.index(b)] = p
    return labels, P


# ---------------------------------------------------------------------------
# rmae.csv
# ---------------------------------------------------------------------------

def write_rmae_csv(path, dates: Sequence[dt.date],
                   curves: Mapping[str, np.ndarray]) -> None:
    """Rolling relative MAE series; ``dates`` label each rolling endpoint."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("date", "variant", "rmae"))
        for label, series in curves.items():
            if len(series) != len(dates):
                raise ValueError(f"{label}: {len(series)} values for "
                                 f"{len(dates)} dates")
            for date, value in zip(dates, series):
                writer.writerow((date.isoformat(), label, _fmt(value)))


# ---------------------------------------------------------------------------
# profits.csv
# ---------------------------------------------------------------------------

def write_profits_csv(path, report: ProfitReport) -> None:
    """Daily trades per variant, then a TOTAL row per variant."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("date", "variant", "h1_hat", "h2_hat",
                         "profit", "cb_profit", "fraction"))
        for label, summary in report.variants.items():
            for date, trade, cb in zip(report.dates, summary.trades,
                                       report.cb_trades):
                if trade is None:
                    writer.writerow((date.isoformat(), label, "", "", "",
                                     _fmt(cb.profit), ""))
                elif not trade.traded:
                    writer.writerow((date.isoformat(), label, "", "",
                                     _fmt(0.0), _fmt(cb.profit), ""))
                else:
                    writer.writerow((date.isoformat(), label,
                                     trade.h1, trade.h2, _fmt(trade.profit),
                                     _fmt(cb.profit), ""))
            writer.writerow(("TOTAL", label, "", "", _fmt(summary.total),
                             _fmt(report.cb_total), _fmt(summary.fraction)))
