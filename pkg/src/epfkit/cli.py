"""Command-line entry points.

Subcommands: ingest, backtest, evaluate, dm, trade, synth.  Exit codes:
0 success, 1 usage or configuration problem, 2 data problem, 3 runtime
failure.  Reports are CSV files, each rendered alongside as a PNG where
a figure makes sense.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import config as configuration
from . import eval as evaluation
from . import figures, pipeline, report, synth, timeseries, trading
from .errors import ConfigError, DataError, EpfKitError

log = logging.getLogger("epfkit.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

_CONFIG_FLAG_KEYS = (
    "data_path", "output_dir", "calibration_days", "test_start", "test_end",
    "model_classes", "decompositions", "pools", "ma_levels", "wavelet_levels",
    "battery_capacity", "battery_min_level", "battery_efficiency",
    "trade_volume", "require_charge_first", "worker_count", "seed", "force",
)


def _add_config_flags(p: argparse.ArgumentParser, battery_only: bool = False):
    if not battery_only:
        p.add_argument("--data", dest="data_path", type=Path,
                       help="panel CSV (timestamp,price,load_da,res_da)")
        p.add_argument("--output-dir", dest="output_dir", type=Path)
        p.add_argument("--calibration-days", dest="calibration_days", type=int)
        p.add_argument("--test-start", dest="test_start",
                       type=dt.date.fromisoformat, metavar="YYYY-MM-DD")
        p.add_argument("--test-end", dest="test_end",
                       type=dt.date.fromisoformat, metavar="YYYY-MM-DD")
        p.add_argument("--model-classes", dest="model_classes",
                       type=_csv_tuple, metavar="ARX,LEAR")
        p.add_argument("--decompositions", dest="decompositions",
                       type=_csv_tuple, metavar="NONE,SC,eSC")
        p.add_argument("--pools", dest="pools", type=_csv_tuple,
                       metavar="MA,S,MAS")
        p.add_argument("--ma-levels", dest="ma_levels", type=_int_tuple,
                       metavar="1,7,28,56,91")
        p.add_argument("--wavelet-levels", dest="wavelet_levels",
                       type=_int_tuple, metavar="5,7,9,10,11")
        p.add_argument("--workers", dest="worker_count", type=int)
        p.add_argument("--force", dest="force",
                       action=argparse.BooleanOptionalAction, default=None,
                       help="recompute cells already present in forecasts.csv")
    p.add_argument("--battery-capacity", dest="battery_capacity", type=float)
    p.add_argument("--battery-min-level", dest="battery_min_level", type=float)
    p.add_argument("--battery-efficiency", dest="battery_efficiency", type=float)
    p.add_argument("--trade-volume", dest="trade_volume", type=float)
    p.add_argument("--require-charge-first", dest="require_charge_first",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="force the buy hour to precede the sell hour")


def _csv_tuple(raw: str):
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _int_tuple(raw: str):
    return tuple(int(part) for part in _csv_tuple(raw))


def _build_config(args) -> configuration.RunConfig:
    file_values = None
    if getattr(args, "config", None):
        file_values = configuration.read_config_file(args.config)
    overrides = {key: getattr(args, key)
                 for key in _CONFIG_FLAG_KEYS
                 if getattr(args, key, None) is not None}
    return configuration.build_config(file_values, overrides)


def _battery(cfg: configuration.RunConfig) -> trading.BatterySpec:
    return trading.BatterySpec(capacity_mwh=cfg.battery_capacity,
                               min_level_mwh=cfg.battery_min_level,
                               efficiency=cfg.battery_efficiency,
                               trade_volume_mwh=cfg.trade_volume)


def _load_panel(path) -> timeseries.HourlyPanel:
    if path is None:
        raise ConfigError("a panel file is required (--data or config data_path)")
    panel, repairs = timeseries.read_panel_csv(path)
    if repairs:
        log.info("%s: %d timestamp repair(s) applied", path, len(repairs))
    return panel


def _actual_prices(panel: timeseries.HourlyPanel, dates) -> np.ndarray:
    return np.stack([panel.price[panel.index_of(d)] for d in dates])


# ---------------------------------------------------------------------------
# report generation shared by backtest/evaluate/dm/trade
# ---------------------------------------------------------------------------

def _write_metrics_and_rmae(panel, dates, by_variant, outdir: Path) -> None:
    actual = _actual_prices(panel, dates)
    rows = report.compute_metric_rows(actual, by_variant)
    report.write_metrics_csv(outdir / "metrics.csv", rows)
    log.info("wrote %s", outdir / "metrics.csv")

    curves: Dict[str, np.ndarray] = {}
    rdates = []
    window = evaluation.ROLLING_WINDOW_DAYS
    if "ARX" not in by_variant:
        log.warning("rolling relative MAE skipped: no ARX benchmark in the run")
    elif len(dates) < window:
        log.warning("rolling relative MAE skipped: %d test days < %d-day window",
                    len(dates), window)
    else:
        bench = evaluation.daily_errors(actual, by_variant["ARX"])
        for label, fc in by_variant.items():
            try:
                curves[label] = evaluation.rmae_rolling(
                    evaluation.daily_errors(actual, fc), bench, window)
            except DataError as exc:
                log.warning("rolling relative MAE skipped for %s: %s", label, exc)
        rdates = [dates[window - 1 + i] for i in range(len(dates) - window + 1)]
    report.write_rmae_csv(outdir / "rmae.csv", rdates, curves)
    log.info("wrote %s", outdir / "rmae.csv")
    if curves:
        figures.rmae_curves(rdates, curves, outdir / "rmae.png")
        log.info("wrote %s", outdir / "rmae.png")


def _write_dm(panel, dates, by_variant, outdir: Path) -> None:
    actual = _actual_prices(panel, dates)
    errors = {label: evaluation.daily_errors(actual, fc)
              for label, fc in by_variant.items()}
    try:
        labels, P = evaluation.dm_matrix(errors)
    except (DataError, ValueError) as exc:
        log.warning("pairwise comparison skipped: %s", exc)
        report.write_dm_csv(outdir / "dm_pvalues.csv", [], np.zeros((0, 0)))
        return
    report.write_dm_csv(outdir / "dm_pvalues.csv", labels, P)
    figures.dm_heatmap(labels, P, outdir / "dm_heatmap.png")
    log.info("wrote %s and %s", outdir / "dm_pvalues.csv", outdir / "dm_heatmap.png")


def _write_profits(panel, dates, by_variant, cfg, outdir: Path) -> None:
    actual = _actual_prices(panel, dates)
    preport = trading.aggregate_profits(actual, by_variant, dates, _battery(cfg),
                                        cfg.require_charge_first)
    report.write_profits_csv(outdir / "profits.csv", preport)
    figures.profit_fractions(
        {label: s.fraction for label, s in preport.variants.items()},
        outdir / "profits.png")
    log.info("wrote %s and %s", outdir / "profits.csv", outdir / "profits.png")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    panel, repairs = timeseries.read_panel_csv(args.csv)
    for event in repairs:
        log.info("repair: %s", event)
    timeseries.write_panel_csv(panel, args.out)
    print(f"{panel.days} days from {panel.date_of(0)} to "
          f"{panel.date_of(panel.days - 1)}, {len(repairs)} repair(s); "
          f"panel written to {args.out}")
    return EXIT_OK


def cmd_backtest(args) -> int:
    cfg = _build_config(args)
    if cfg.test_start is None or cfg.test_end is None:
        raise ConfigError("backtest needs test_start and test_end")
    panel = _load_panel(cfg.data_path)
    variants = pipeline.resolve_variants(cfg.model_classes, cfg.decompositions,
                                         cfg.pools)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    fpath = outdir / "forecasts.csv"

    existing = {}
    has_rows = fpath.exists() and fpath.stat().st_size > 0
    if has_rows and not cfg.force:
        existing = report.read_forecasts_csv(fpath).cells
        if existing:
            log.info("resuming: %d cells already in %s", len(existing), fpath)
    fresh = cfg.force or not has_rows

    with open(fpath, "w" if fresh else "a", encoding="utf-8", newline="") as fh:
        if fresh:
            report.write_forecast_header(fh)

        def on_day(date, results, errs):
            for label in results:
                report.append_forecast_cell(fh, date, label, results[label])
            for label in errs:
                report.append_forecast_cell(fh, date, label, np.full(24, np.nan))
            fh.flush()

        matrix = pipeline.run_backtest(
            panel, cfg.calibration_days, cfg.test_start, cfg.test_end,
            variants, cfg.ma_levels, cfg.wavelet_levels,
            workers=cfg.worker_count, existing=existing, on_day=on_day)

    if not np.any(np.isfinite(matrix.values)):
        raise EpfKitError("every forecast in the run failed; see the log")
    if matrix.failures:
        log.warning("%d (day, variant) cells failed and are NaN in the report",
                    len(matrix.failures))

    by_variant = matrix.by_variant()
    _write_metrics_and_rmae(panel, matrix.dates, by_variant, outdir)
    _write_dm(panel, matrix.dates, by_variant, outdir)
    _write_profits(panel, matrix.dates, by_variant, cfg, outdir)
    print(f"backtest complete: {len(matrix.dates)} days x "
          f"{len(matrix.variants)} variants, {len(matrix.failures)} failures; "
          f"reports in {outdir}")
    return EXIT_OK


def _load_forecast_run(cfg, args):
    fset = report.read_forecasts_csv(args.forecasts)
    if not fset.cells:
        raise DataError(f"{args.forecasts} holds no complete forecast cells")
    panel = _load_panel(cfg.data_path)
    return panel, fset.dates, fset.by_variant()


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    panel, dates, by_variant = _load_forecast_run(cfg, args)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_metrics_and_rmae(panel, dates, by_variant, outdir)
    return EXIT_OK


def cmd_dm(args) -> int:
    cfg = _build_config(args)
    panel, dates, by_variant = _load_forecast_run(cfg, args)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_dm(panel, dates, by_variant, outdir)
    return EXIT_OK


def cmd_trade(args) -> int:
    cfg = _build_config(args)
    panel, dates, by_variant = _load_forecast_run(cfg, args)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    _write_profits(panel, dates, by_variant, cfg, outdir)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _build_config(args)
    if args.days < cfg.calibration_days + 30:
        raise ConfigError(
            f"--days must cover the calibration window plus 30 test days "
            f"({cfg.calibration_days + 30}); pass --calibration-days to match "
            f"your intended run")
    overrides = {name: getattr(args, name)
                 for name in ("start", "base_price", "trend_amplitude",
                              "daily_amplitude", "weekly_amplitude",
                              "ar_coeff", "noise_scale", "load_noise",
                              "res_noise")
                 if getattr(args, name) is not None}
    params = synth.SynthParams(days=args.days, seed=cfg.seed, **overrides)
    panel = synth.generate(params)
    timeseries.write_panel_csv(panel, args.out)
    sidecar = Path(str(args.out) + ".params.json")
    synth.write_sidecar(params, sidecar)
    print(f"wrote {params.days} synthetic days to {args.out} "
          f"(parameters in {sidecar})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="epfkit",
        description="Day-ahead electricity price forecasting toolkit",
        epilog="configuration keys (config file and flags; flags win):\n"
               + configuration.config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalise a raw CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, default=Path("panel.csv"))
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("backtest", help="rolling-window forecast run + reports")
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--seed", dest="seed", type=int, help=argparse.SUPPRESS)
    _add_config_flags(p)
    p.set_defaults(func=cmd_backtest)

    for name, func, what in (
            ("evaluate", cmd_evaluate, "accuracy metrics from a forecast file"),
            ("dm", cmd_dm, "pairwise forecast-comparison tests"),
            ("trade", cmd_trade, "battery trading profits")):
        p = sub.add_parser(name, help=what)
        p.add_argument("--config", type=Path)
        p.add_argument("--data", dest="data_path", type=Path, required=False)
        p.add_argument("--forecasts", type=Path, required=True)
        p.add_argument("--output-dir", dest="output_dir", type=Path)
        if name == "trade":
            _add_config_flags(p, battery_only=True)
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="generate a synthetic panel CSV")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--calibration-days", dest="calibration_days", type=int)
    p.add_argument("--config", type=Path)
    p.add_argument("--start", type=dt.date.fromisoformat, metavar="YYYY-MM-DD")
    p.add_argument("--base-price", dest="base_price", type=float)
    p.add_argument("--trend-amplitude", dest="trend_amplitude", type=float)
    p.add_argument("--daily-amplitude", dest="daily_amplitude", type=float)
    p.add_argument("--weekly-amplitude", dest="weekly_amplitude", type=float)
    p.add_argument("--ar-coeff", dest="ar_coeff", type=float)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--load-noise", dest="load_noise", type=float)
    p.add_argument("--res-noise", dest="res_noise", type=float)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EpfKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:            # total failure, not a usage problem
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
