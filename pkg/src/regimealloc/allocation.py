"""Constrained mean-variance equity weights and realised portfolio paths.

Each month the investor holds ``w`` in the market and ``1 - w`` in bills:

    R_p[t+1] = R_f[t+1] + w[t] * (R_m[t+1] - R_f[t+1])

with ``w[t] = fhat / (gamma * sigma2)`` clipped to ``[w_min, w_max]`` and then
to ``[w_prev / adjust_cap, w_prev * adjust_cap]``. Trading costs are charged
on drift-adjusted turnover.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, NumericError, WindowError
from .forecast import ForecastSeries
from .ingest import PredictorPanel, parse_yyyymm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AllocationConfig:
    """Investor preferences and trading constraints.

    Attributes:
        gamma: Relative risk aversion
        w_min: Lowest equity weight (0 rules out short selling)
        w_max: Highest equity weight (1.5 allows 50% leverage)
        cost_bps: Proportional cost per unit of turnover, in basis points
        var_window: Months in the rolling variance estimate
        adjust_cap: Largest ratio between consecutive weights
        zero_floor: Weight ceiling for the month after a zero position

    """

    gamma: float = 3.0
    w_min: float = 0.0
    w_max: float = 1.5
    cost_bps: float = 50.0
    var_window: int = 60
    adjust_cap: float = 2.0
    zero_floor: float = 0.10

    def __post_init__(self):
        """Check the constraint set is coherent."""
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive", module="allocation")
        if not 0 <= self.w_min < self.w_max:
            raise ConfigError("need 0 <= w_min < w_max", module="allocation")
        if self.cost_bps < 0:
            raise ConfigError("cost_bps must be nonnegative", module="allocation")
        if self.var_window < 12:
            raise ConfigError("var_window must be at least 12", module="allocation")
        if not self.adjust_cap >= 1:
            raise ConfigError("adjust_cap must be at least 1", module="allocation")
        if self.zero_floor < 0:
            raise ConfigError("zero_floor must be nonnegative", module="allocation")

    @property
    def cost(self) -> float:
        """Cost per unit of turnover as a decimal."""
        return self.cost_bps / 10_000


@dataclass(frozen=True, eq=False)
class AllocationPath:
    """Monthly weights and returns of one strategy.

    ``w[k]`` is chosen at the end of month ``dates[k] - 1`` and held over
    ``dates[k]``; ``turnover[k]`` is traded at that rebalance and its cost is
    charged to ``r_net[k]``.
    """

    name: str
    dates: pd.PeriodIndex
    w_target: np.ndarray
    w: np.ndarray
    sigma2hat: np.ndarray
    turnover: np.ndarray
    r_gross: np.ndarray
    r_net: np.ndarray
    wealth: np.ndarray
    rf: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    def to_frame(self) -> pd.DataFrame:
        """``yyyymm,w_target,w,sigma2hat,turnover,r_gross,r_net,wealth`` table."""
        return pd.DataFrame(
            {
                "yyyymm": self.dates.year * 100 + self.dates.month,
                "w_target": self.w_target,
                "w": self.w,
                "sigma2hat": self.sigma2hat,
                "turnover": self.turnover,
                "r_gross": self.r_gross,
                "r_net": self.r_net,
                "wealth": self.wealth,
            }
        )


def rolling_variance(r_simple, window: int = 60) -> float:
    """Sample variance (divisor ``N - 1``) of the last ``window`` returns.

    A window with no spread has variance exactly zero.

    Raises:
        WindowError: Fewer than ``window`` observations

    """
    r_simple = np.asarray(r_simple, dtype=np.float64)
    if len(r_simple) < window:
        raise WindowError(
            f"{len(r_simple)} returns for a {window}-month variance", module="allocation"
        )
    recent = r_simple[-window:]
    if np.ptp(recent) == 0:
        return 0.0
    return float(np.var(recent, ddof=1))


def optimal_weight(
    fhat: float,
    sigma2: float,
    cfg: AllocationConfig,
    w_prev: float | None = None,
) -> tuple[float, float]:
    """Mean-variance weight with range and adjustment constraints.

    The range clamp is applied first, then the adjustment cap around
    ``w_prev``. After a zero position the multiplicative cap cannot move, so
    the weight may rise to at most ``cfg.zero_floor``. ``w_prev=None`` marks
    the first month, which has no adjustment cap.

    Returns:
        Unconstrained target weight and the implemented weight

    Raises:
        NumericError: If ``sigma2`` is not positive

    """
    if not sigma2 > 0:
        raise NumericError(f"variance estimate {sigma2} is not positive", module="allocation")
    w_target = fhat / (cfg.gamma * sigma2)
    w = min(max(w_target, cfg.w_min), cfg.w_max)
    if w_prev is None:
        return w_target, w
    if w_prev > 0:
        w = min(max(w, w_prev / cfg.adjust_cap), w_prev * cfg.adjust_cap)
    elif w > cfg.zero_floor:
        logger.debug("zero position escape: weight %.4f capped at %.2f", w, cfg.zero_floor)
        w = cfg.zero_floor
    return w_target, w


def _rebalance(w: np.ndarray, market: np.ndarray, r_gross: np.ndarray) -> np.ndarray:
    """Drift-adjusted turnover; the first month establishes the position."""
    turnover = np.empty_like(w)
    turnover[0] = abs(w[0])
    drifted = w[:-1] * (1 + market[:-1]) / (1 + r_gross[:-1])
    turnover[1:] = np.abs(w[1:] - drifted)
    return turnover


def _path(
    name: str,
    dates: pd.PeriodIndex,
    w_target: np.ndarray,
    w: np.ndarray,
    sigma2hat: np.ndarray,
    rf: np.ndarray,
    market: np.ndarray,
    cfg: AllocationConfig,
) -> AllocationPath:
    r_gross = rf + w * (market - rf)
    turnover = _rebalance(w, market, r_gross)
    r_net = r_gross - cfg.cost * turnover
    return AllocationPath(
        name=name,
        dates=dates,
        w_target=w_target,
        w=w,
        sigma2hat=sigma2hat,
        turnover=turnover,
        r_gross=r_gross,
        r_net=r_net,
        wealth=np.cumprod(1 + r_net),
        rf=rf,
    )


def variance_path(
    panel: PredictorPanel,
    dates: pd.PeriodIndex,
    window: int = 60,
) -> np.ndarray:
    """Rolling variance known at the formation month of each target month."""
    out = np.empty(len(dates))
    for k, date in enumerate(dates):
        pos = panel.position(date)
        try:
            out[k] = rolling_variance(panel.r_simple[:pos], window)
        except WindowError as e:
            e.date = date
            raise
    return out


def run_allocation(
    f: ForecastSeries,
    panel: PredictorPanel,
    cfg: AllocationConfig | None = None,
    sigma2hat: np.ndarray | None = None,
) -> AllocationPath:
    """Turn forecasts into a realised portfolio path.

    Args:
        f: Forecasts of next-month excess returns
        panel: Panel supplying realised returns and the variance history
        cfg: Preferences and constraints
        sigma2hat: Precomputed variance path, so that strategies share it

    """
    cfg = AllocationConfig() if cfg is None else cfg
    rows = np.array([panel.position(d) for d in f.dates])
    if not np.allclose(panel.r_simple[rows], f.realized, rtol=0, atol=1e-12):
        raise DataError("forecast realisations do not match the panel", module="allocation")
    if sigma2hat is None:
        sigma2hat = variance_path(panel, f.dates, cfg.var_window)

    n = len(f.dates)
    w_target = np.empty(n)
    w = np.empty(n)
    w_prev = None
    for k in range(n):
        try:
            w_target[k], w[k] = optimal_weight(f.fhat[k], sigma2hat[k], cfg, w_prev)
        except NumericError as e:
            e.date = f.dates[k]
            raise
        w_prev = w[k]

    path = _path(
        f.name, f.dates, w_target, w, sigma2hat, panel.rf[rows], panel.market[rows], cfg
    )
    logger.info(
        "%s: mean weight %.3f, terminal wealth %.2f", path.name, w.mean(), path.wealth[-1]
    )
    return path


def run_buy_and_hold(
    panel: PredictorPanel,
    oos_start: pd.Period | str | int,
    oos_end: pd.Period | str | int,
    cfg: AllocationConfig | None = None,
) -> AllocationPath:
    """Buy the market at the start of the window and hold it.

    The initial purchase is charged once; the adjustment cap does not apply.
    """
    cfg = AllocationConfig() if cfg is None else cfg
    dates = pd.period_range(parse_yyyymm(oos_start), parse_yyyymm(oos_end), freq="M")
    rows = np.array([panel.position(d) for d in dates])
    ones = np.ones(len(dates))
    return _path(
        "buy-and-hold",
        dates,
        ones,
        ones,
        np.full(len(dates), np.nan),
        panel.rf[rows],
        panel.market[rows],
        cfg,
    )


def constraint_violations(path: AllocationPath, cfg: AllocationConfig) -> list[str]:
    """Scan a path for weights outside the range or adjustment caps.

    Returns:
        One message per violating month; empty when the path is clean

    """
    tol = 1e-12
    problems = []
    for k, (date, w) in enumerate(zip(path.dates, path.w)):
        if not cfg.w_min - tol <= w <= cfg.w_max + tol:
            problems.append(f"{date}: weight {w:.6f} outside [{cfg.w_min}, {cfg.w_max}]")
        if k == 0:
            continue
        prev = path.w[k - 1]
        if prev > 0:
            if not prev / cfg.adjust_cap - tol <= w <= prev * cfg.adjust_cap + tol:
                problems.append(f"{date}: weight {w:.6f} moved more than x{cfg.adjust_cap} from {prev:.6f}")
        elif w > cfg.zero_floor + tol:
            problems.append(f"{date}: weight {w:.6f} above {cfg.zero_floor} after a zero position")
    return problems
