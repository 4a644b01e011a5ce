"""Command-line round trips on a small synthetic dataset."""

import csv
import time

import numpy as np
import pytest

from epfkit.cli import (EXIT_DATA, EXIT_OK, EXIT_USAGE, build_parser, main)

FAST = ["--model-classes", "ARX", "--ma-levels", "1,7", "--wavelet-levels", "5",
        "--workers", "1"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """synth + ingest once; the backtest commands reuse the panel."""
    root = tmp_path_factory.mktemp("cli")
    raw = root / "raw.csv"
    panel = root / "panel.csv"
    assert main(["synth", "--out", str(raw), "--days", "48", "--seed", "6",
                 "--calibration-days", "18"]) == EXIT_OK
    assert (root / "raw.csv.params.json").exists()
    assert main(["ingest", str(raw), "--out", str(panel)]) == EXIT_OK
    return root


def run_backtest(workdir, outdir, extra=()):
    return main(["backtest", "--data", str(workdir / "panel.csv"),
                 "--output-dir", str(outdir),
                 "--calibration-days", "30",
                 "--test-start", "2018-02-12", "--test-end", "2018-02-14",
                 *FAST, *extra])


def test_backtest_writes_all_reports(workdir):
    out = workdir / "out"
    assert run_backtest(workdir, out) == EXIT_OK
    for name in ("forecasts.csv", "metrics.csv", "dm_pvalues.csv",
                 "rmae.csv", "profits.csv", "profits.png"):
        assert (out / name).exists(), name

    with open(out / "forecasts.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["date", "hour", "variant", "forecast"]
    # 3 days x 7 ARX variants x 24 hours
    assert len(rows) == 1 + 3 * 7 * 24

    with open(out / "metrics.csv") as fh:
        metrics = list(csv.reader(fh))
    variants = [r[0] for r in metrics[1:]]
    assert variants == ["ARX", "SCARX-MA", "SCARX-S", "SCARX-MAS",
                        "eSCARX-MA", "eSCARX-S", "eSCARX-MAS"]
    assert all(float(r[1]) > 0 for r in metrics[1:])

    # 3 test days cannot feed the 365-day rolling window or the DM test,
    # so those reports are header-only rather than missing
    assert (out / "rmae.csv").read_text().startswith("date,variant,rmae")
    assert (out / "dm_pvalues.csv").read_text().splitlines() == [
        "row_variant,col_variant,p_value"]


def test_backtest_resume_recomputes_nothing(workdir, monkeypatch):
    out = workdir / "out_resume"
    assert run_backtest(workdir, out) == EXIT_OK
    before = (out / "forecasts.csv").read_text()

    import epfkit.pipeline as pipeline

    def exploding(args):
        raise AssertionError("resume must not recompute")

    monkeypatch.setattr(pipeline, "_day_task", exploding)
    assert run_backtest(workdir, out) == EXIT_OK
    after = (out / "forecasts.csv").read_text()
    assert after == before


def test_backtest_force_recomputes(workdir):
    out = workdir / "out_force"
    assert run_backtest(workdir, out) == EXIT_OK
    first = (out / "forecasts.csv").read_text()
    assert run_backtest(workdir, out, extra=["--force"]) == EXIT_OK
    assert (out / "forecasts.csv").read_text() == first   # deterministic rerun


def test_evaluate_dm_trade_from_saved_forecasts(workdir):
    out = workdir / "out_eval"
    assert run_backtest(workdir, out) == EXIT_OK
    redone = workdir / "redone"
    common = ["--data", str(workdir / "panel.csv"),
              "--forecasts", str(out / "forecasts.csv"),
              "--output-dir", str(redone)]
    assert main(["evaluate", *common]) == EXIT_OK
    assert main(["dm", *common]) == EXIT_OK
    assert main(["trade", *common]) == EXIT_OK
    assert (redone / "metrics.csv").read_text() == \
        (out / "metrics.csv").read_text()
    assert (redone / "profits.csv").read_text() == \
        (out / "profits.csv").read_text()


def test_trade_respects_battery_flags(workdir):
    out = workdir / "out_bat"
    assert run_backtest(workdir, out) == EXIT_OK
    redone = workdir / "redone_bat"
    assert main(["trade", "--data", str(workdir / "panel.csv"),
                 "--forecasts", str(out / "forecasts.csv"),
                 "--output-dir", str(redone),
                 "--trade-volume", "0.5"]) == EXIT_OK
    with open(out / "profits.csv") as fh:
        full = [r for r in csv.reader(fh) if r[0] == "TOTAL" and r[1] == "ARX"]
    with open(redone / "profits.csv") as fh:
        half = [r for r in csv.reader(fh) if r[0] == "TOTAL" and r[1] == "ARX"]
    assert float(half[0][4]) == pytest.approx(0.5 * float(full[0][4]))


def test_usage_errors_exit_1(workdir, capsys):
    assert main(["backtest", "--data", str(workdir / "panel.csv"),
                 "--output-dir", str(workdir / "x"), *FAST]) == EXIT_USAGE
    assert main(["backtest", "--no-such-flag"]) == EXIT_USAGE
    assert main(["synth", "--out", str(workdir / "y.csv"), "--days", "40",
                 "--calibration-days", "100"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    capsys.readouterr()


def test_missing_files_exit_2(workdir, tmp_path, capsys):
    assert main(["ingest", str(tmp_path / "nope.csv")]) == EXIT_DATA
    assert main(["evaluate", "--data", str(workdir / "panel.csv"),
                 "--forecasts", str(tmp_path / "nope.csv"),
                 "--output-dir", str(tmp_path)]) == EXIT_DATA
    assert main(["backtest", "--data", str(tmp_path / "nope.csv"),
                 "--output-dir", str(tmp_path / "o"),
                 "--calibration-days", "30",
                 "--test-start", "2018-02-12", "--test-end", "2018-02-13",
                 *FAST]) == EXIT_DATA
    capsys.readouterr()


def test_test_range_outside_panel_exit_2(workdir, tmp_path, capsys):
    assert main(["backtest", "--data", str(workdir / "panel.csv"),
                 "--output-dir", str(tmp_path / "o"),
                 "--calibration-days", "30",
                 "--test-start", "2030-01-01", "--test-end", "2030-01-02",
                 *FAST]) == EXIT_DATA
    capsys.readouterr()


def test_config_file_with_flag_override(workdir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"data_path = {workdir / 'panel.csv'}\n"
        "calibration_days = 30\n"
        "test_start = 2018-02-12\n"
        "test_end = 2018-02-14\n"
        "model_classes = ARX\n"
        "ma_levels = 1,7\n"
        "wavelet_levels = 5\n"
        "worker_count = 1\n")
    out = tmp_path / "out_cfg"
    # flags override the file: shrink the test range to a single day
    assert main(["backtest", "--config", str(cfg),
                 "--output-dir", str(out),
                 "--test-end", "2018-02-12"]) == EXIT_OK
    with open(out / "forecasts.csv") as fh:
        dates = {r[0] for r in csv.reader(fh) if r and r[0] != "date"}
    assert dates == {"2018-02-12"}


def test_synth_days_must_cover_calibration(tmp_path, capsys):
    code = main(["synth", "--out", str(tmp_path / "s.csv"), "--days", "100",
                 "--calibration-days", "90"])
    assert code == EXIT_USAGE
    capsys.readouterr()


def test_rolling_rmae_report_labels_window_endpoints(tmp_path):
    # fabricated forecasts, long enough to feed the 365-day window
    from epfkit.cli import _write_metrics_and_rmae
    from epfkit.synth import SynthParams, generate

    panel = generate(SynthParams(days=366, seed=30))
    dates = tuple(panel.date_of(d) for d in range(366))
    actual = panel.price
    by_variant = {"ARX": actual + 1.0, "LEAR": actual + 2.0}
    _write_metrics_and_rmae(panel, dates, by_variant, tmp_path)

    with open(tmp_path / "rmae.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    lear = [r for r in rows if r[1] == "LEAR"]
    assert len(lear) == 2   # 366 days give two window positions
    assert lear[0][0] == dates[364].isoformat()
    assert lear[1][0] == dates[365].isoformat()
    assert float(lear[0][2]) == pytest.approx(2.0)
    assert (tmp_path / "rmae.png").exists()


def test_small_arx_backtest_meets_time_budget(tmp_path):
    """120-day panel, ARX class only, 30 test days on 4 workers."""
    raw = tmp_path / "raw.csv"
    panel = tmp_path / "panel.csv"
    assert main(["synth", "--out", str(raw), "--days", "120", "--seed", "13",
                 "--calibration-days", "90"]) == EXIT_OK
    assert main(["ingest", str(raw), "--out", str(panel)]) == EXIT_OK
    start = time.perf_counter()
    assert main(["backtest", "--data", str(panel),
                 "--output-dir", str(tmp_path / "out"),
                 "--calibration-days", "90",
                 "--test-start", "2018-04-01", "--test-end", "2018-04-30",
                 "--model-classes", "ARX",
                 # the 91-day smoother cannot fit inside a 90-day window
                 "--ma-levels", "1,7,28,56",
                 "--workers", "4"]) == EXIT_OK
    assert time.perf_counter() - start < 60.0
    assert (tmp_path / "out" / "metrics.csv").exists()


def test_parser_lists_all_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for name in ("ingest", "backtest", "evaluate", "dm", "trade", "synth"):
        assert name in text


def test_help_enumerates_config_keys_with_defaults():
    text = build_parser().format_help()
    assert "configuration keys" in text
    for key in ("data_path", "output_dir", "calibration_days", "test_start",
                "test_end", "model_classes", "decompositions", "pools",
                "ma_levels", "wavelet_levels", "worker_count", "force",
                "battery_capacity", "battery_min_level", "battery_efficiency",
                "trade_volume", "require_charge_first"):
        assert key in text, key
    assert "1456" in text   # calibration window default
