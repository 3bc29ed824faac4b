"""Recursive construction of the univariate predictor index.

Three methods reduce the predictor cross-section to one series at each
formation date ``t``, using only panel rows dated ``<= t``:

- ``pls``: three-pass regression filter with the next-month excess return as
  proxy. Pass 1 regresses each standardized predictor on ``r[s+1]`` to get its
  loading, pass 2 regresses each month's cross-section on the loadings to get
  the index. Pass 3 is the predictive regression run in ``forecast``.
- ``pca``: first principal component score of the standardized predictors.
- ``fc``: equal-weighted mean of the univariate predictive-regression
  forecasts; the "index" is already a return forecast.

PLS and PCA indices are oriented so that their in-window predictive slope on
the next-month return is nonnegative.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd
from sklearn.decomposition import PCA
from sklearn.preprocessing import StandardScaler

from .errors import ConfigError, SingularityError, WindowError
from .ingest import PredictorPanel, parse_yyyymm

logger = logging.getLogger(__name__)

Method = Literal["pls", "pca", "fc"]
METHODS: tuple[Method, ...] = ("pls", "pca", "fc")


@dataclass(frozen=True)
class IndexConfig:
    """Estimation switches shared by the index builders.

    Attributes:
        target: Return the index is aligned with, ``simple`` or ``log``
        pass2_intercept: Include an intercept in the PLS cross-section
            regression; without it the index is the no-intercept slope
        min_window: Minimum months in the estimation window ending at ``t``

    """

    target: Literal["simple", "log"] = "simple"
    pass2_intercept: bool = True
    min_window: int = 60

    def __post_init__(self):
        """Validate the switches."""
        if self.target not in ("simple", "log"):
            raise ConfigError(f"unknown index target {self.target!r}", module="index")
        if self.min_window < 3:
            raise ConfigError("min_window must be at least 3", module="index")


@dataclass(frozen=True, eq=False)
class IndexFit:
    """The index estimated at one formation date.

    Attributes:
        method: Builder that produced the fit
        date: Formation month ``t``
        value: Index at ``t`` (PLS/PCA) or the combined forecast (FC)
        series: In-window index ``E[0..t]`` (None for FC)
        loadings: First-pass loadings (PLS) or component weights (PCA) per
            predictor; zero for excluded predictors, empty for FC
        mean: Window mean of each predictor
        scale: Window standard deviation of each predictor
        intercepts: PLS pass-2 intercepts per month (None otherwise)
        explained: Explained variance share of the first component (PCA)

    """

    method: Method
    date: pd.Period
    value: float
    series: np.ndarray | None
    loadings: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    intercepts: np.ndarray | None = None
    explained: float | None = None


def _target(panel: PredictorPanel, config: IndexConfig) -> np.ndarray:
    return panel.r_simple if config.target == "simple" else panel.r_log


def _zero_variance(mean: np.ndarray, var: np.ndarray) -> np.ndarray:
    # Constant columns can carry rounding-level variance.
    return var <= (1e-12 * np.abs(mean)) ** 2


def _window(
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: IndexConfig,
) -> tuple[pd.Period, np.ndarray, np.ndarray]:
    """Predictor rows ``0..t`` and target ``r[1..t]`` aligned with rows ``0..t-1``."""
    date = parse_yyyymm(t)
    pos = panel.position(date)
    if pos + 1 < config.min_window:
        raise WindowError(
            f"{pos + 1} months of history, need {config.min_window}",
            module="index",
            date=date,
        )
    r = _target(panel, config)
    return date, panel.X[: pos + 1], r[1 : pos + 1]


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Standardize window columns and flag the usable ones.

    Args:
        X: Window rows of the predictor matrix

    Returns:
        Standardized matrix, column means, column standard deviations and a
        mask of predictors with nonzero variance

    """
    scaler = StandardScaler().fit(X)
    active = ~_zero_variance(scaler.mean_, scaler.var_)
    Z = scaler.transform(X)
    return Z, scaler.mean_, np.sqrt(scaler.var_), active


def _orient(E: np.ndarray, y: np.ndarray) -> float:
    """Sign making the predictive slope of ``y`` on ``E[:-1]`` nonnegative."""
    lagged = E[: len(y)]
    slope = np.dot(lagged - lagged.mean(), y - y.mean())
    return -1.0 if slope < 0 else 1.0


def build_pls(
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: IndexConfig | None = None,
) -> IndexFit:
    """Estimate the PLS index at formation month ``t``.

    Args:
        panel: Predictor panel; the window runs from its first row to ``t``
        t: Formation month
        config: Estimation switches

    Returns:
        IndexFit with the in-window index path and first-pass loadings

    Raises:
        WindowError: Fewer than ``min_window`` months up to ``t``
        SingularityError: All first-pass loadings equal, or no predictor varies

    """
    config = IndexConfig() if config is None else config
    date, X, y = _window(panel, t, config)
    Z, mean, scale, active = standardize(X)
    Za = Z[:, active]
    n_active = Za.shape[1]
    if n_active == 0:
        raise SingularityError("no predictor varies in the window", module="index", date=date)

    design = np.column_stack([np.ones(len(y)), y])
    phi = np.linalg.lstsq(design, Za[: len(y)], rcond=None)[0][1]

    intercepts = None
    if n_active == 1 or not config.pass2_intercept:
        norm = float(phi @ phi)
        if norm == 0.0:
            raise SingularityError("first-pass loadings are all zero", module="index", date=date)
        E = Za @ phi / norm
    else:
        spread = np.ptp(phi)
        if spread <= 1e-12 * np.max(np.abs(phi)) or spread == 0.0:
            raise SingularityError(
                "first-pass loadings are all equal; cross-section regression is singular",
                module="index",
                date=date,
            )
        cross = np.column_stack([np.ones(n_active), phi])
        coef = np.linalg.lstsq(cross, Za.T, rcond=None)[0]
        intercepts, E = coef[0], coef[1]

    sign = _orient(E, y)
    loadings = np.zeros(panel.n_pred)
    loadings[active] = sign * phi
    return IndexFit(
        method="pls",
        date=date,
        value=float(sign * E[-1]),
        series=sign * E,
        loadings=loadings,
        mean=mean,
        scale=scale,
        intercepts=intercepts,
    )


def build_pca(
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: IndexConfig | None = None,
) -> IndexFit:
    """Estimate the first-principal-component index at formation month ``t``.

    Zero-variance predictors are excluded before the decomposition.

    Raises:
        WindowError: Fewer than ``min_window`` months up to ``t``
        SingularityError: The window covariance has no variation to extract

    """
    config = IndexConfig() if config is None else config
    date, X, y = _window(panel, t, config)
    Z, mean, scale, active = standardize(X)
    Za = Z[:, active]
    if Za.shape[1] == 0:
        raise SingularityError("no predictor varies in the window", module="index", date=date)
    pca = PCA(n_components=1, svd_solver="full").fit(Za)
    if not pca.explained_variance_[0] > 1e-12:
        raise SingularityError("covariance matrix is rank deficient", module="index", date=date)
    E = pca.transform(Za)[:, 0]
    sign = _orient(E, y)
    weights = np.zeros(panel.n_pred)
    weights[active] = sign * pca.components_[0]
    return IndexFit(
        method="pca",
        date=date,
        value=float(sign * E[-1]),
        series=sign * E,
        loadings=weights,
        mean=mean,
        scale=scale,
        explained=float(pca.explained_variance_ratio_[0]),
    )


def combine_forecasts(
    x_hist: np.ndarray,
    y: np.ndarray,
    x_now: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Equal-weighted combination of univariate predictive regressions.

    Each predictor ``i`` is fitted as ``y = a_i + b_i * x_hist[:, i]`` by OLS
    and evaluated at ``x_now[i]``. A predictor with no variance in
    ``x_hist`` contributes its intercept, the mean of ``y``.

    Args:
        x_hist: ``n x N`` predictor values paired with ``y``
        y: Next-month returns
        x_now: Predictor values at the formation date

    Returns:
        Combined forecast, the individual forecasts and a mask of degraded
        (intercept-only) predictors

    """
    x_hist = np.atleast_2d(np.asarray(x_hist, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    xm = x_hist.mean(axis=0)
    ym = y.mean()
    dx = x_hist - xm
    sxx = (dx**2).sum(axis=0)
    sxy = dx.T @ (y - ym)
    degraded = _zero_variance(xm, sxx / len(y))
    b = np.where(degraded, 0.0, sxy / np.where(degraded, 1.0, sxx))
    a = ym - b * xm
    forecasts = a + b * np.asarray(x_now, dtype=np.float64)
    return float(forecasts.mean()), forecasts, degraded


def build_fc(
    panel: PredictorPanel,
    t: pd.Period | str | int,
    config: IndexConfig | None = None,
) -> IndexFit:
    """Combine univariate forecasts of ``r[t+1]`` formed at month ``t``.

    Raises:
        WindowError: Fewer than ``min_window`` months up to ``t``

    """
    config = IndexConfig() if config is None else config
    date, X, y = _window(panel, t, config)
    _, mean, scale, _ = standardize(X)
    value, _, degraded = combine_forecasts(X[: len(y)], y, X[-1])
    if degraded.any():
        names = [n for n, d in zip(panel.names, degraded) if d]
        logger.warning(
            "%s: zero-variance predictor(s) %s use the window mean", date, ", ".join(names)
        )
    return IndexFit(
        method="fc",
        date=date,
        value=value,
        series=None,
        loadings=np.empty(0),
        mean=mean,
        scale=scale,
    )


BUILDERS: dict[Method, Callable[..., IndexFit]] = {
    "pls": build_pls,
    "pca": build_pca,
    "fc": build_fc,
}


def build(
    panel: PredictorPanel,
    method: Method,
    t: pd.Period | str | int,
    config: IndexConfig | None = None,
) -> IndexFit:
    """Dispatch to the builder for ``method``."""
    try:
        builder = BUILDERS[method]
    except KeyError:
        raise ConfigError(f"unknown index method {method!r}", module="index")
    return builder(panel, t, config)


@dataclass(frozen=True, eq=False)
class EconomicIndex:
    """Index values and estimation metadata across formation dates.

    Attributes:
        method: Builder used
        dates: Formation months
        values: Index value (or FC forecast) per formation month
        loadings: ``K x N`` loadings/weights per formation month (``K x 0``
            for FC)
        means: ``K x N`` window means
        scales: ``K x N`` window standard deviations
        names: Predictor names

    """

    method: Method
    dates: pd.PeriodIndex
    values: np.ndarray
    loadings: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    names: tuple[str, ...]

    @classmethod
    def from_fits(
        cls,
        method: Method,
        fits: list[IndexFit],
        names: tuple[str, ...],
    ) -> EconomicIndex:
        """Stack per-date fits into one record."""
        n = len(names)
        width = 0 if method == "fc" else n
        return cls(
            method=method,
            dates=pd.PeriodIndex([f.date for f in fits], freq="M"),
            values=np.array([f.value for f in fits]),
            loadings=np.array([f.loadings for f in fits]).reshape(len(fits), width),
            means=np.array([f.mean for f in fits]).reshape(len(fits), n),
            scales=np.array([f.scale for f in fits]).reshape(len(fits), n),
            names=names,
        )

    def loadings_frame(self) -> pd.DataFrame:
        """Loadings as ``yyyymm`` + one column per predictor."""
        frame = pd.DataFrame(
            self.loadings,
            columns=list(self.names) if self.loadings.shape[1] else [],
        )
        frame.insert(0, "yyyymm", self.dates.year * 100 + self.dates.month)
        return frame


def build_index(
    panel: PredictorPanel,
    method: Method,
    dates: Iterable[pd.Period | str | int] | None = None,
    config: IndexConfig | None = None,
    jobs: int = 1,
) -> EconomicIndex:
    """Estimate the index at every formation date.

    Dates are independent given the panel, so ``jobs > 1`` evaluates them on a
    thread pool; results are collected in date order.

    Args:
        panel: Predictor panel
        method: ``pls``, ``pca`` or ``fc``
        dates: Formation months (default: every month with a full window)
        config: Estimation switches
        jobs: Worker threads

    """
    config = IndexConfig() if config is None else config
    if dates is None:
        dates = panel.dates[config.min_window - 1 :]
    dates = [parse_yyyymm(d) for d in dates]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        fits = list(pool.map(lambda d: build(panel, method, d, config), dates))
    return EconomicIndex.from_fits(method, fits, panel.names)
