"""Backtest index-based equity premium forecasts with yield-curve state switching.

regimealloc builds a univariate index from many economic predictors (PLS, PCA
or forecast combination), forecasts next-month excess returns with one-state
and Up/Down switching regressions, turns the forecasts into constrained
mean-variance portfolios and evaluates them by certainty-equivalent return.
"""

from .allocation import (
    AllocationConfig,
    AllocationPath,
    optimal_weight,
    rolling_variance,
    run_allocation,
    run_buy_and_hold,
)
from .config import RunConfig, load_config
from .errors import BacktestError, ConfigError, DataError, NumericError
from .evaluation import (
    BootstrapConfig,
    PerformanceReport,
    bootstrap_dcer,
    cer,
    delta_cer,
    per_state_report,
    sharpe_monthly,
    turnover_stats,
)
from .forecast import (
    ForecastConfig,
    ForecastSeries,
    forecast_histmean,
    forecast_one_state,
    forecast_switching,
    r2_oos,
    run_oos,
)
from .index import EconomicIndex, build_fc, build_index, build_pca, build_pls
from .ingest import PredictorPanel, derive_predictors, load_panel
from .main import backtest
from .states import StateSeries, attach_nber, classify_updown
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AllocationConfig",
    "AllocationPath",
    "BacktestError",
    "BootstrapConfig",
    "ConfigError",
    "DataError",
    "EconomicIndex",
    "ForecastConfig",
    "ForecastSeries",
    "NumericError",
    "PerformanceReport",
    "PredictorPanel",
    "RunConfig",
    "StateSeries",
    "SynthSpec",
    "attach_nber",
    "backtest",
    "bootstrap_dcer",
    "build_fc",
    "build_index",
    "build_pca",
    "build_pls",
    "cer",
    "classify_updown",
    "delta_cer",
    "derive_predictors",
    "forecast_histmean",
    "forecast_one_state",
    "forecast_switching",
    "generate",
    "load_config",
    "load_panel",
    "optimal_weight",
    "per_state_report",
    "r2_oos",
    "rolling_variance",
    "run_allocation",
    "run_buy_and_hold",
    "run_oos",
    "sharpe_monthly",
    "turnover_stats",
]
