"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 1,
DataError -> 2, anything else -> 3.
"""


class EpfKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(EpfKitError):
    """Invalid configuration, flags or argument combinations."""


class DataError(EpfKitError):
    """Malformed or inconsistent input data."""


class DegenerateWindowError(DataError):
    """A calibration window has zero robust dispersion (MAD = 0)."""


class ConvergenceError(EpfKitError):
    """An iterative solver failed to converge within its budget."""

    def __init__(self, message: str, sweeps: int = -1, last_delta: float = float("nan")):
        super().__init__(message)
        self.sweeps = sweeps          # iterations actually spent
        self.last_delta = last_delta  # max coefficient change in the final sweep
