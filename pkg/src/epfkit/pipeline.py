"""End-to-end day-ahead forecasting across all model variants.

The forecasting recipe per target day is additive in three stages:

1. base forecast: VST the raw prices, fit 24 hourly models, predict,
   invert the VST;
2. decomposed forecast: remove a long-term seasonal curve first, run
   stage 1 on the residual, then add back a per-hour seasonal forecast
   (either the window's last smoothed day, or the smoothed curve of the
   window extended by the base forecast);
3. pooling: arithmetic means of the per-smoother forecasts.

Fourteen variants result: 2 base models, and for each model class the
naive and extrapolated seasonal routes pooled over the moving-average
levels (MA), the wavelet levels (S), or all ten smoothers (MAS).
"""

from __future__ import annotations

import datetime as dt
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import ltsc, regress, vst
from .errors import ConvergenceError, DataError, EpfKitError
from .ltsc import LtscSpec
from .timeseries import CalibrationWindow, HourlyPanel, WindowView, rolling_windows

log = logging.getLogger("epfkit.pipeline")

MODEL_CLASSES = ("ARX", "LEAR")
DECOMPOSITIONS = ("NONE", "SC", "eSC")
POOLS = ("MA", "S", "MAS")

# failures the backtest absorbs as a NaN day instead of aborting the run
_DAY_ERRORS = (EpfKitError, ValueError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class VariantId:
    """One published forecast column.

    ``pool`` must be absent exactly when no decomposition is applied.
    """

    model_class: str
    decomposition: str = "NONE"
    pool: Optional[str] = None

    def __post_init__(self):
        if self.model_class not in MODEL_CLASSES:
            raise ValueError(f"unknown model class {self.model_class!r}")
        if self.decomposition not in DECOMPOSITIONS:
            raise ValueError(f"unknown decomposition {self.decomposition!r}")
        if self.decomposition == "NONE":
            if self.pool is not None:
                raise ValueError("base variants take no pool")
        else:
            if self.pool not in POOLS:
                raise ValueError(f"decomposed variants need a pool from {POOLS}, "
                                 f"got {self.pool!r}")

    @property
    def label(self) -> str:
        if self.decomposition == "NONE":
            return self.model_class
        prefix = "eSC" if self.decomposition == "eSC" else "SC"
        return f"{prefix}{self.model_class}-{self.pool}"

    @classmethod
    def from_label(cls, label: str) -> "VariantId":
        if label in MODEL_CLASSES:
            return cls(label)
        head, sep, pool = label.partition("-")
        decomposition = "eSC" if head.startswith("eSC") else "SC"
        model_class = head[len(decomposition):]
        if not sep or model_class not in MODEL_CLASSES or pool not in POOLS:
            raise ValueError(f"unrecognised variant label {label!r}")
        return cls(model_class, decomposition, pool)


def resolve_variants(model_classes: Sequence[str] = MODEL_CLASSES,
                     decompositions: Sequence[str] = DECOMPOSITIONS,
                     pools: Sequence[str] = POOLS) -> Tuple[VariantId, ...]:
    """All requested variants in canonical reporting order."""
    out: List[VariantId] = []
    for mc in MODEL_CLASSES:
        if mc not in model_classes:
            continue
        if "NONE" in decompositions:
            out.append(VariantId(mc))
        for dec in ("SC", "eSC"):
            if dec in decompositions:
                for pool in POOLS:
                    if pool in pools:
                        out.append(VariantId(mc, dec, pool))
    if not out:
        raise ValueError("variant selection is empty")
    return tuple(out)


def pool_specs(pool: str, ma_levels: Sequence[int] = ltsc.MA_LEVELS,
               wavelet_levels: Sequence[int] = ltsc.WAVELET_LEVELS
               ) -> Tuple[LtscSpec, ...]:
    ma = tuple(LtscSpec("ma", lv) for lv in ma_levels)
    wl = tuple(LtscSpec("wavelet", lv) for lv in wavelet_levels)
    if pool == "MA":
        return ma
    if pool == "S":
        return wl
    if pool == "MAS":
        return ma + wl
    raise ValueError(f"unknown pool {pool!r}")


# ---------------------------------------------------------------------------
# single-day forecasting
# ---------------------------------------------------------------------------

def _fit_predict(yt: np.ndarray, x1t: np.ndarray, x2t: np.ndarray,
                 dows: np.ndarray, model_class: str) -> np.ndarray:
    """Fit the 24 hourly models on transformed data and predict the target day."""
    T = yt.shape[0]
    if model_class == "ARX":
        preds = np.empty(24)
        for h in range(24):
            X, y = regress.build_arx_matrix(yt, x1t, x2t, dows, h)
            model = regress.ols_fit(X, y)
            preds[h] = model.predict(regress.build_arx_row(yt, x1t, x2t, dows, T, h))
        return preds
    if model_class == "LEAR":
        X, targets = regress.build_lear_matrix(yt, x1t, x2t, dows)
        models = regress.lear_fit_all_hours(X, targets)
        row = regress.build_lear_row(yt, x1t, x2t, dows, T)
        return np.array([m.predict(row) for m in models])
    raise ValueError(f"unknown model class {model_class!r}")


def _exog_transformed(view: WindowView) -> Tuple[np.ndarray, np.ndarray]:
    # normalizers are fit on the calibration window only; the target-day
    # fundamentals are mapped with the window statistics
    n1 = vst.fit(view.load[:-1])
    n2 = vst.fit(view.res[:-1])
    return vst.transform(view.load, n1), vst.transform(view.res, n2)


def forecast_base(view: WindowView, model_class: str) -> np.ndarray:
    """24 prices for the target day from the no-decomposition model."""
    ny = vst.fit(view.price)
    yt = vst.transform(view.price, ny)
    x1t, x2t = _exog_transformed(view)
    preds = _fit_predict(yt, x1t, x2t, view.dows, model_class)
    return vst.inverse(preds, ny)


def forecast_sc_single(view: WindowView, model_class: str, spec: LtscSpec,
                       mode: str = "naive",
                       base_forecast: Optional[np.ndarray] = None) -> np.ndarray:
    """24 prices via one seasonal smoother.

    ``mode`` picks how the target day's seasonal curve is obtained:
    "naive" copies the window's last smoothed day, "extrapolated"
    smooths the window extended by ``base_forecast`` (which must come
    from :func:`forecast_base` of the same model class).
    """
    if mode == "naive":
        curve, t_hat = ltsc.naive_ltsc_forecast(view.price, spec)
    elif mode == "extrapolated":
        if base_forecast is None:
            raise ValueError("extrapolated mode needs the base forecast")
        curve, t_hat = ltsc.extrapolated_ltsc(view.price, base_forecast, spec)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    resid = view.price - curve.reshape(view.price.shape)
    ny = vst.fit(resid)
    yt = vst.transform(resid, ny)
    x1t, x2t = _exog_transformed(view)
    preds = _fit_predict(yt, x1t, x2t, view.dows, model_class)
    return vst.inverse(preds, ny) + t_hat


def combine(forecasts: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise arithmetic mean of equally weighted forecasts."""
    if len(forecasts) == 0:
        raise ValueError("cannot combine an empty set of forecasts")
    stack = np.asarray([np.asarray(f, dtype=float) for f in forecasts])
    if stack.ndim != 2:
        raise ValueError("forecasts must share one length")
    return stack.mean(axis=0)


def forecast_day(view: WindowView, variants: Sequence[VariantId],
                 ma_levels: Sequence[int] = ltsc.MA_LEVELS,
                 wavelet_levels: Sequence[int] = ltsc.WAVELET_LEVELS
                 ) -> Tuple[Dict[str, np.ndarray], Dict[str, str]]:
    """Compute the requested variants for one target day.

    Returns (forecasts by label, failure messages by label).  A failed
    base forecast takes the extrapolated route of its class down with
    it; a failed single smoother fails only the pools containing it.
    """
    results: Dict[str, np.ndarray] = {}
    failures: Dict[str, str] = {}
    for mc in MODEL_CLASSES:
        wanted = [v for v in variants if v.model_class == mc]
        if not wanted:
            continue
        base_variant = VariantId(mc)
        esc_wanted = [v for v in wanted if v.decomposition == "eSC"]
        sc_wanted = [v for v in wanted if v.decomposition == "SC"]

        base = None
        base_err: Optional[str] = None
        if base_variant in wanted or esc_wanted:
            try:
                base = forecast_base(view, mc)
            except _DAY_ERRORS as exc:
                base_err = f"base forecast failed: {exc}"
        if base_variant in wanted:
            if base is not None:
                results[base_variant.label] = base
            else:
                failures[base_variant.label] = base_err

        for mode, group in (("naive", sc_wanted), ("extrapolated", esc_wanted)):
            if not group:
                continue
            specs: List[LtscSpec] = []
            for v in group:
                for spec in pool_specs(v.pool, ma_levels, wavelet_levels):
                    if spec not in specs:
                        specs.append(spec)
            singles: Dict[LtscSpec, np.ndarray] = {}
            errors: Dict[LtscSpec, str] = {}
            for spec in specs:
                try:
                    if mode == "extrapolated" and base is None:
                        raise EpfKitError(base_err)
                    singles[spec] = forecast_sc_single(view, mc, spec, mode, base)
                except _DAY_ERRORS as exc:
                    errors[spec] = f"{spec.label}: {exc}"
            for v in group:
                members = pool_specs(v.pool, ma_levels, wavelet_levels)
                missing = [s for s in members if s not in singles]
                if missing:
                    failures[v.label] = "; ".join(errors[s] for s in missing)
                else:
                    results[v.label] = combine([singles[s] for s in members])
    return results, failures


# ---------------------------------------------------------------------------
# rolling backtest
# ---------------------------------------------------------------------------

@dataclass
class ForecastMatrix:
    """Forecasts for every (variant, test day, hour); NaN marks failures."""

    variants: Tuple[str, ...]
    dates: Tuple[dt.date, ...]
    values: np.ndarray                       # (n_variants, n_days, 24)
    failures: Dict[Tuple[dt.date, str], str] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (len(self.variants), len(self.dates), 24)
        if self.values.shape != expected:
            raise ValueError(f"values must be {expected}, got {self.values.shape}")

    def by_variant(self) -> Dict[str, np.ndarray]:
        return {v: self.values[i] for i, v in enumerate(self.variants)}


# worker processes inherit the panel and settings through this module global
_WORKER_CTX: Optional[Tuple] = None


def _init_worker(panel: HourlyPanel, calibration_days: int,
                 ma_levels: Tuple[int, ...], wavelet_levels: Tuple[int, ...]):
    global _WORKER_CTX
    _WORKER_CTX = (panel, calibration_days, ma_levels, wavelet_levels)


def _day_task(args: Tuple[int, Tuple[str, ...]]):
    target_day, labels = args
    panel, calibration_days, ma_levels, wavelet_levels = _WORKER_CTX
    window = CalibrationWindow(target_day - calibration_days, target_day - 1)
    view = window.training_view(panel)
    variants = [VariantId.from_label(lb) for lb in labels]
    results, failures = forecast_day(view, variants, ma_levels, wavelet_levels)
    return target_day, results, failures


def run_backtest(panel: HourlyPanel, calibration_days: int,
                 first_target: dt.date, last_target: dt.date,
                 variants: Sequence[VariantId],
                 ma_levels: Sequence[int] = ltsc.MA_LEVELS,
                 wavelet_levels: Sequence[int] = ltsc.WAVELET_LEVELS,
                 workers: int = 1,
                 existing: Optional[Mapping[Tuple[dt.date, str], np.ndarray]] = None,
                 on_day=None) -> ForecastMatrix:
    """Roll a daily-shifted calibration window over the test period.

    ``existing`` carries already-computed (date, label) cells which are
    merged into the output and skipped; ``on_day`` is called once per
    test day, in date order, with (date, new results, failures) so the
    caller can persist incrementally.
    """
    variants = tuple(variants)
    labels = tuple(v.label for v in variants)
    first_idx = panel.index_of(first_target)
    last_idx = panel.index_of(last_target)
    windows = rolling_windows(panel, calibration_days, first_idx, last_idx)
    dates = tuple(panel.date_of(w.target_day) for w in windows)

    existing = dict(existing or {})
    values = np.full((len(labels), len(dates), 24), np.nan)
    for (date, label), arr in existing.items():
        if label in labels and dates[0] <= date <= dates[-1]:
            d = (date - dates[0]).days
            values[labels.index(label), d] = np.asarray(arr, dtype=float)

    tasks = []
    for w in windows:
        date = panel.date_of(w.target_day)
        missing = tuple(lb for lb in labels if (date, lb) not in existing)
        if missing:
            tasks.append((w.target_day, missing))

    failures: Dict[Tuple[dt.date, str], str] = {}

    def _absorb(target_day: int, results: Dict[str, np.ndarray],
                errs: Dict[str, str]):
        date = panel.date_of(target_day)
        d = (date - dates[0]).days
        for label, arr in results.items():
            values[labels.index(label), d] = arr
        for label, msg in errs.items():
            failures[(date, label)] = msg
            log.warning("%s %s failed: %s", date, label, msg)
        if on_day is not None:
            on_day(date, results, errs)
        done = "ok" if not errs else f"{len(errs)} variant(s) failed"
        log.info("forecast %s: %d variant(s), %s", date, len(results), done)

    if not tasks:
        log.info("all %d test days already present; nothing to compute", len(dates))
    elif workers <= 1:
        _init_worker(panel, calibration_days, tuple(ma_levels), tuple(wavelet_levels))
        for task in tasks:
            day, results, errs = _day_task(task)
            _absorb(day, results, errs)
    else:
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(panel, calibration_days,
                          tuple(ma_levels), tuple(wavelet_levels))) as pool:
            futures = [pool.submit(_day_task, task) for task in tasks]
            for task, future in zip(tasks, futures):
                try:
                    day, results, errs = future.result()
                except ConvergenceError as exc:
                    day = task[0]
                    results, errs = {}, {lb: str(exc) for lb in task[1]}
                _absorb(day, results, errs)

    return ForecastMatrix(variants=labels, dates=dates, values=values,
                          failures=failures)
