"""Run configuration: defaults, key=value config files, flag overrides.

The config file is flat text, one ``key = value`` per line, ``#`` for
comments.  Every key has a matching command-line flag; flags win over
the file, the file wins over defaults.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Optional, Tuple

from . import ltsc
from .errors import ConfigError
from .pipeline import DECOMPOSITIONS, MODEL_CLASSES, POOLS

DEFAULT_CALIBRATION_DAYS = 1456   # 208 weeks


@dataclass
class RunConfig:
    data_path: Optional[Path] = None
    output_dir: Path = Path("out")
    calibration_days: int = DEFAULT_CALIBRATION_DAYS
    test_start: Optional[dt.date] = None
    test_end: Optional[dt.date] = None
    model_classes: Tuple[str, ...] = MODEL_CLASSES
    decompositions: Tuple[str, ...] = DECOMPOSITIONS
    pools: Tuple[str, ...] = POOLS
    ma_levels: Tuple[int, ...] = ltsc.MA_LEVELS
    wavelet_levels: Tuple[int, ...] = ltsc.WAVELET_LEVELS
    battery_capacity: float = 1.25
    battery_min_level: float = 0.25
    battery_efficiency: float = 0.9
    trade_volume: Optional[float] = None
    require_charge_first: bool = False
    worker_count: int = 4
    seed: int = 0                 # synthetic generation only
    force: bool = False

    def validate(self) -> "RunConfig":
        if self.calibration_days < 8:
            raise ConfigError("calibration_days must be at least 8")
        if self.test_start and self.test_end and self.test_start > self.test_end:
            raise ConfigError("test_start is after test_end")
        _subset("model_classes", self.model_classes, MODEL_CLASSES)
        _subset("decompositions", self.decompositions, DECOMPOSITIONS)
        _subset("pools", self.pools, POOLS)
        _subset("ma_levels", self.ma_levels, ltsc.MA_LEVELS)
        _subset("wavelet_levels", self.wavelet_levels, ltsc.WAVELET_LEVELS)
        if self.worker_count < 1:
            raise ConfigError("worker_count must be positive")
        return self


def _subset(name: str, chosen, allowed) -> None:
    if not chosen:
        raise ConfigError(f"{name} cannot be empty")
    bad = [c for c in chosen if c not in allowed]
    if bad:
        raise ConfigError(f"{name} allows {allowed}, got {bad}")


def _parse_date(raw: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad date {raw!r}: {exc}") from None


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {raw!r}")


def _split(raw: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _int_tuple(raw: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in _split(raw))
    except ValueError as exc:
        raise ConfigError(f"bad integer list {raw!r}: {exc}") from None


_PARSERS = {
    "data_path": lambda raw: Path(raw.strip()),
    "output_dir": lambda raw: Path(raw.strip()),
    "calibration_days": lambda raw: int(raw),
    "test_start": _parse_date,
    "test_end": _parse_date,
    "model_classes": _split,
    "decompositions": _split,
    "pools": _split,
    "ma_levels": _int_tuple,
    "wavelet_levels": _int_tuple,
    "battery_capacity": lambda raw: float(raw),
    "battery_min_level": lambda raw: float(raw),
    "battery_efficiency": lambda raw: float(raw),
    "trade_volume": lambda raw: float(raw),
    "require_charge_first": _parse_bool,
    "worker_count": lambda raw: int(raw),
    "seed": lambda raw: int(raw),
    "force": _parse_bool,
}


def read_config_file(path) -> Dict[str, object]:
    """Parse a key=value file into typed config values."""
    values: Dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            key, sep, raw = stripped.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _PARSERS[key](raw.strip())
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def build_config(file_values: Optional[Dict[str, object]] = None,
                 overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """Layer defaults, config file, then explicit overrides."""
    merged: Dict[str, object] = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    cfg = RunConfig(**merged)
    return cfg.validate()


def config_help() -> str:
    """One line per key with its default, for --help output."""
    defaults = RunConfig()
    lines = []
    for f in fields(RunConfig):
        value = getattr(defaults, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"  {f.name} (default: {value})")
    return "\n".join(lines)
