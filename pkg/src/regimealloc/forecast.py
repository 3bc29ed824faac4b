"""One-step-ahead excess-return forecasts over the out-of-sample window.

Every forecast of ``r[t+1]`` is formed at month ``t`` from panel rows dated
``<= t``: the index is re-estimated at ``t`` and the predictive regression
``r[s+1] = a + b * E[s]`` is fitted over ``s <= t - 1``. The switching model
fits that regression separately on Up and Down months, labelling each pair
by the state at ``s``, and forecasts with the coefficients of the state at
``t``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
import statsmodels.api as sm

from .errors import BacktestError, ConfigError, DataError, NumericError, WindowError
from .index import (
    METHODS,
    EconomicIndex,
    IndexConfig,
    IndexFit,
    Method,
    build,
    combine_forecasts,
)
from .ingest import PredictorPanel, parse_yyyymm
from .states import DOWN, UP, StateSeries, classify_updown

logger = logging.getLogger(__name__)

Model = Literal["one-state", "switching", "histmean"]
MODELS: tuple[Model, ...] = ("one-state", "switching")


@dataclass(frozen=True)
class ForecastConfig:
    """Sample and estimation settings for the recursive forecasts.

    Attributes:
        train_start: First month of every estimation window
        min_window: Minimum (index, next return) pairs before a forecast
        min_state_obs: Minimum pairs per state before the switching model
            fits that state on its own; below it the pooled fit is used
        target: ``simple`` or ``log`` excess return for the index alignment
        pass2_intercept: Intercept in the PLS cross-section regression
        truncate_negative: Floor model forecasts at zero; the historical mean is left as is

    """

    train_start: pd.Period = field(default_factory=lambda: pd.Period("1960-01", "M"))
    min_window: int = 60
    min_state_obs: int = 24
    target: Literal["simple", "log"] = "simple"
    pass2_intercept: bool = True
    truncate_negative: bool = False

    def __post_init__(self):
        """Parse the start month and check the sample minimums."""
        try:
            object.__setattr__(self, "train_start", parse_yyyymm(self.train_start))
        except BacktestError as e:
            raise ConfigError(f"train_start: {e.message}", module="forecast")
        if self.min_window < 3 or self.min_state_obs < 3:
            raise ConfigError("minimum sample sizes must be at least 3", module="forecast")

    @property
    def index_config(self) -> IndexConfig:
        """The matching index estimation settings."""
        return IndexConfig(
            target=self.target,
            pass2_intercept=self.pass2_intercept,
            min_window=self.min_window,
        )


@dataclass(frozen=True)
class Prediction:
    """A single forecast with the coefficients behind it."""

    value: float
    coefficients: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ForecastSeries:
    """Forecasts for consecutive target months.

    Attributes:
        model: ``one-state``, ``switching`` or ``histmean``
        method: Index method, or ``none`` for the historical mean
        dates: Target months ``t + 1``
        fhat: Forecast of ``r_simple[t + 1]`` formed at ``t``
        realized: Realised ``r_simple[t + 1]``
        state: Up/Down label at the formation month ``t``
        coefficients: Per-target-month regression coefficients
        index: Index estimates at the formation months (None for histmean)

    """

    model: Model
    method: Method | Literal["none"]
    dates: pd.PeriodIndex
    fhat: np.ndarray
    realized: np.ndarray
    state: np.ndarray
    coefficients: pd.DataFrame
    index: EconomicIndex | None = None

    @property
    def name(self) -> str:
        """Strategy identifier such as ``pls-switching`` or ``histmean``."""
        return self.model if self.method == "none" else f"{self.method}-{self.model}"

    def head(self, n: int) -> ForecastSeries:
        """First ``n`` forecasts."""
        return ForecastSeries(
            model=self.model,
            method=self.method,
            dates=self.dates[:n],
            fhat=self.fhat[:n],
            realized=self.realized[:n],
            state=self.state[:n],
            coefficients=self.coefficients.iloc[:n],
            index=self.index,
        )

    def to_frame(self) -> pd.DataFrame:
        """``yyyymm,fhat,realized,state`` table."""
        return pd.DataFrame(
            {
                "yyyymm": self.dates.year * 100 + self.dates.month,
                "fhat": self.fhat,
                "realized": self.realized,
                "state": self.state,
            }
        )


def _target(panel: PredictorPanel, config: ForecastConfig) -> np.ndarray:
    return panel.r_simple if config.target == "simple" else panel.r_log


def fit_predictive(
    E: np.ndarray,
    y: np.ndarray,
    date: pd.Period | None = None,
) -> dict[str, float]:
    """OLS of ``y`` on a constant and ``E``.

    A regressor without variance leaves an intercept-only fit whose forecast
    is the window mean of ``y``.

    Returns:
        ``alpha``, ``beta`` and their standard errors ``se_alpha``, ``se_beta``

    """
    if np.ptp(E) == 0.0:
        logger.warning("%s: index has no variance; forecast is the window mean", date)
        return {"alpha": float(y.mean()), "beta": 0.0, "se_alpha": np.nan, "se_beta": np.nan}
    result = sm.OLS(y, sm.add_constant(E, has_constant="add")).fit()
    alpha, beta = result.params
    se_alpha, se_beta = result.bse
    return {
        "alpha": float(alpha),
        "beta": float(beta),
        "se_alpha": float(se_alpha),
        "se_beta": float(se_beta),
    }


def _pairs(
    fit: IndexFit,
    panel: PredictorPanel,
    t: pd.Period,
    config: ForecastConfig,
) -> tuple[int, np.ndarray, np.ndarray]:
    pos = panel.position(t)
    if pos < config.min_window:
        raise WindowError(
            f"{pos} (index, return) pairs, need {config.min_window}",
            module="forecast",
            date=t,
        )
    y = _target(panel, config)[1 : pos + 1]
    E = fit.series[:pos] if fit.series is not None else None
    return pos, E, y


def forecast_one_state(
    fit: IndexFit,
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: ForecastConfig | None = None,
) -> Prediction:
    """Forecast ``r[t+1]`` from the pooled predictive regression.

    For the FC method the index value is already a forecast and is passed
    through unchanged.

    Args:
        fit: Index estimated at ``t``
        panel: Panel whose first row starts the estimation window
        t: Formation month
        config: Forecast settings

    """
    config = ForecastConfig() if config is None else config
    t = parse_yyyymm(t)
    pos, E, y = _pairs(fit, panel, t, config)
    if fit.method == "fc":
        return Prediction(fit.value)
    coef = fit_predictive(E, y, t)
    return Prediction(coef["alpha"] + coef["beta"] * fit.value, coef)


def forecast_switching(
    fit: IndexFit,
    states: StateSeries,
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: ForecastConfig | None = None,
) -> Prediction:
    """Forecast ``r[t+1]`` with state-specific intercept and slope.

    Up and Down pairs are fitted separately; a state with fewer than
    ``min_state_obs`` pairs falls back to the pooled fit. For FC the
    univariate regressions are estimated within the current state's pairs.

    Args:
        fit: Index estimated at ``t``
        states: Up/Down labels covering the panel months
        panel: Panel whose first row starts the estimation window
        t: Formation month
        config: Forecast settings

    """
    config = ForecastConfig() if config is None else config
    t = parse_yyyymm(t)
    pos, E, y = _pairs(fit, panel, t, config)
    labels = states.align(panel.dates[: pos + 1]).updown
    current = labels[pos]
    in_state = {UP: labels[:pos] == UP, DOWN: labels[:pos] == DOWN}

    if fit.method == "fc":
        mask = in_state[current]
        if mask.sum() < config.min_state_obs:
            logger.warning(
                "%s: %d %s months, using the pooled combination", t, mask.sum(), current
            )
            return Prediction(fit.value, {"pooled": 1.0})
        value, _, degraded = combine_forecasts(panel.X[:pos][mask], y[mask], panel.X[pos])
        if degraded.any():
            names = [n for n, d in zip(panel.names, degraded) if d]
            logger.warning(
                "%s: zero-variance predictor(s) %s in %s months use the state mean",
                t,
                ", ".join(names),
                current,
            )
        return Prediction(value, {"pooled": 0.0})

    pooled = fit_predictive(E, y, t)
    coefficients = {"alpha": pooled["alpha"], "beta": pooled["beta"]}
    by_state = {}
    for label, mask in in_state.items():
        key = label.lower()
        if mask.sum() < config.min_state_obs:
            if label == current:
                logger.warning(
                    "%s: %d %s months, using the pooled fit", t, mask.sum(), label
                )
            by_state[label] = pooled
        else:
            by_state[label] = fit_predictive(E[mask], y[mask], t)
        coefficients[f"alpha_{key}"] = by_state[label]["alpha"]
        coefficients[f"beta_{key}"] = by_state[label]["beta"]
        coefficients[f"se_beta_{key}"] = by_state[label]["se_beta"]
    coef = by_state[current]
    return Prediction(coef["alpha"] + coef["beta"] * fit.value, coefficients)


def forecast_histmean(
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: ForecastConfig | None = None,
) -> Prediction:
    """Expanding-window mean of the excess return up to and including ``t``."""
    config = ForecastConfig() if config is None else config
    pos = panel.position(t)
    return Prediction(float(_target(panel, config)[: pos + 1].mean()))


def run_oos(
    panel: PredictorPanel,
    states: StateSeries | None,
    method: Method | Literal["none"],
    model: Model,
    oos_start: pd.Period | str | int,
    oos_end: pd.Period | str | int,
    config: ForecastConfig | None = None,
    jobs: int = 1,
) -> ForecastSeries:
    """Produce one forecast per month of ``oos_start..oos_end``.

    The panel is cut to ``train_start..oos_end`` and the index re-estimated
    at every formation month. Months are independent, so ``jobs > 1``
    evaluates them on a thread pool with results kept in date order.

    Args:
        panel: Predictor panel covering training and OOS months
        states: Up/Down labels (derived from the panel slope when None)
        method: Index method, ignored for ``histmean``
        model: ``one-state``, ``switching`` or ``histmean``
        oos_start: First target month
        oos_end: Last target month
        config: Forecast settings
        jobs: Worker threads

    Returns:
        ForecastSeries over the OOS window

    """
    config = ForecastConfig() if config is None else config
    if model not in (*MODELS, "histmean"):
        raise ConfigError(f"unknown model {model!r}", module="forecast")
    if model != "histmean" and method not in METHODS:
        raise ConfigError(f"unknown index method {method!r}", module="forecast")
    start, end = parse_yyyymm(oos_start), parse_yyyymm(oos_end)
    if end < start:
        raise ConfigError("oos_end precedes oos_start", module="forecast", date=end)
    if end > panel.dates[-1]:
        raise DataError("panel ends before the OOS window", module="forecast", date=end)

    train_start = max(config.train_start, panel.dates[0])
    if start - 1 < train_start:
        raise WindowError("no training months before the OOS window", module="forecast", date=start)
    work = panel.slice(train_start, end)
    if states is None:
        states = classify_updown(work.slope, work.dates)
    states = states.align(work.dates)
    index_config = config.index_config

    def one(target: pd.Period) -> tuple[IndexFit | None, Prediction]:
        t = target - 1
        if model == "histmean":
            return None, forecast_histmean(work, t, config)
        fit = build(work, method, t, index_config)
        if model == "one-state":
            return fit, forecast_one_state(fit, work, t, config)
        return fit, forecast_switching(fit, states, work, t, config)

    targets = pd.period_range(start, end, freq="M")
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(one, targets))

    fhat = np.array([p.value for _, p in results])
    if config.truncate_negative and model != "histmean":
        fhat = np.maximum(fhat, 0.0)
    rows = np.array([work.position(d) for d in targets])
    if not np.isfinite(fhat).all():
        bad = targets[int(np.argmax(~np.isfinite(fhat)))]
        raise NumericError("non-finite forecast", module="forecast", date=bad)

    fits = [f for f, _ in results if f is not None]
    series = ForecastSeries(
        model=model,
        method="none" if model == "histmean" else method,
        dates=targets,
        fhat=fhat,
        realized=work.r_simple[rows],
        state=states.updown[rows - 1],
        coefficients=pd.DataFrame([p.coefficients for _, p in results], index=targets),
        index=EconomicIndex.from_fits(method, fits, work.names) if fits else None,
    )
    logger.info("%s: %d forecasts %s..%s", series.name, len(targets), start, end)
    return series


def r2_oos(
    f: ForecastSeries,
    bench: ForecastSeries,
    mask: np.ndarray | None = None,
) -> float:
    """Out-of-sample R-squared of ``f`` against a benchmark forecast.

    Args:
        f: Model forecasts
        bench: Benchmark forecasts on the same target months
        mask: Optional boolean month subset (e.g. Down months)

    Raises:
        DataError: Misaligned dates
        NumericError: Zero benchmark squared error

    """
    if not f.dates.equals(bench.dates):
        raise DataError("forecast dates are not aligned", module="forecast")
    keep = np.ones(len(f.dates), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    sse = np.sum((f.realized[keep] - f.fhat[keep]) ** 2)
    sse_bench = np.sum((bench.realized[keep] - bench.fhat[keep]) ** 2)
    if sse_bench == 0.0:
        raise NumericError("benchmark squared error is zero", module="forecast")
    return float(1.0 - sse / sse_bench)
