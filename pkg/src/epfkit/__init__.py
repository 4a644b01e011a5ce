"""Day-ahead electricity price forecasting toolkit.

Implements the seasonal-component modelling chain for hourly day-ahead
markets: robust variance-stabilising transforms, long-term seasonal
component (LTSC) estimation by moving averages and wavelet smoothing,
per-hour ARX / LASSO price models, LTSC extrapolation through a
next-day base forecast, rolling-window backtesting, statistical
evaluation (MAE, RMSE, rolling rMAE, multivariate Diebold-Mariano) and
a battery arbitrage trading benchmark.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ConvergenceError, DataError, DegenerateWindowError

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "DegenerateWindowError",
    "__version__",
]
