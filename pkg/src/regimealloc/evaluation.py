"""Certainty-equivalent returns, Sharpe ratios, turnover and bootstrap tests.

CER uses unconditional moments of realised monthly portfolio returns and is
annualised (in percent) by multiplying by 1200. State-conditional CERs use the
moments of the months in that state only.

The significance test of ``H0: dCER <= 0`` resamples the paired monthly
returns of model and benchmark with a circular block bootstrap, recentres the
replicated dCER at the sample value to impose the null, and reports the
one-sided share of replications at least as large as the sample dCER.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from arch.bootstrap import CircularBlockBootstrap

from .allocation import AllocationPath
from .errors import ConfigError, DataError, NumericError
from .forecast import ForecastSeries, r2_oos
from .states import DOWN, UP, StateSeries

logger = logging.getLogger(__name__)

ANNUALIZE = 1200
STATES = ("expansion", "recession", "up", "down")
MIN_STATE_MONTHS = 12


@dataclass(frozen=True)
class BootstrapConfig:
    """Bootstrap settings.

    Attributes:
        reps: Replications (at least 199)
        block_len: Block length; None uses ``ceil(T ** (1/3))``
        seed: Seed of the PCG64 generator driving the resampling

    """

    reps: int = 499
    block_len: int | None = None
    seed: int = 0

    def __post_init__(self):
        """Validate replication count and block length."""
        if self.reps < 199:
            raise ConfigError("bootstrap reps must be at least 199", module="evaluation")
        if self.block_len is not None and self.block_len < 1:
            raise ConfigError("block_len must be positive", module="evaluation")


def _series(path: AllocationPath, net: bool) -> np.ndarray:
    return path.r_net if net else path.r_gross


def _subset(values: np.ndarray, mask) -> np.ndarray:
    return values if mask is None else values[np.asarray(mask, dtype=bool)]


def cer_of(returns: np.ndarray, gamma: float, ddof: int = 0) -> float:
    """Annualised CER (percent) of a monthly return vector."""
    returns = np.asarray(returns, dtype=np.float64)
    return float((returns.mean() - gamma / 2 * returns.var(ddof=ddof)) * ANNUALIZE)


def cer(
    path: AllocationPath,
    gamma: float,
    *,
    net: bool = True,
    mask=None,
    ddof: int = 0,
) -> float:
    """Annualised certainty-equivalent return of a path, in percent.

    Args:
        path: Portfolio path
        gamma: Relative risk aversion
        net: Use returns after trading costs
        mask: Optional boolean month subset
        ddof: Variance divisor adjustment (0 = population variance)

    """
    returns = _subset(_series(path, net), mask)
    if len(returns) == 0:
        raise DataError("no months to evaluate", module="evaluation")
    return cer_of(returns, gamma, ddof)


def _check_aligned(model: AllocationPath, bench: AllocationPath) -> None:
    if not model.dates.equals(bench.dates):
        raise DataError(
            f"{model.name} and {bench.name} cover different months", module="evaluation"
        )


def delta_cer(
    model: AllocationPath,
    bench: AllocationPath,
    gamma: float,
    *,
    net: bool = True,
    mask=None,
    label: str = "sample",
    ddof: int = 0,
) -> float:
    """CER of ``model`` minus CER of ``bench`` over the same months.

    Raises:
        DataError: Misaligned paths, or an empty subset (named by ``label``)

    """
    _check_aligned(model, bench)
    a = _subset(_series(model, net), mask)
    if len(a) == 0:
        raise DataError(f"no {label} months to evaluate", module="evaluation")
    b = _subset(_series(bench, net), mask)
    return cer_of(a, gamma, ddof) - cer_of(b, gamma, ddof)


def sharpe_monthly(path: AllocationPath, rf=None, *, net: bool = True) -> float:
    """Monthly Sharpe ratio of portfolio returns in excess of the risk-free rate.

    Raises:
        NumericError: If excess returns have no variation

    """
    rf = path.rf if rf is None else np.asarray(rf, dtype=np.float64)
    excess = _series(path, net) - rf
    sd = excess.std(ddof=1)
    if not sd > 1e-15 * max(1.0, abs(excess.mean())):
        raise NumericError(f"{path.name}: excess returns have zero volatility", module="evaluation")
    return float(excess.mean() / sd)


def turnover_stats(model: AllocationPath, bench: AllocationPath) -> tuple[float, float]:
    """Average monthly turnover (percent) and its ratio to the benchmark's.

    Raises:
        NumericError: If the benchmark never trades

    """
    _check_aligned(model, bench)
    avg = float(model.turnover.mean() * 100)
    bench_avg = float(bench.turnover.mean() * 100)
    if bench_avg == 0.0:
        raise NumericError(f"{bench.name} has zero turnover", module="evaluation")
    return avg, avg / bench_avg


def default_block_len(n: int) -> int:
    """``ceil(n ** (1/3))``, e.g. 8 for 489 months."""
    return max(1, math.ceil(round(n ** (1 / 3), 12)))


def bootstrap_dcer(
    model: AllocationPath,
    bench: AllocationPath,
    gamma: float,
    B: int = 499,
    block_len: int | None = None,
    seed: int = 0,
    *,
    net: bool = True,
    mask=None,
    ddof: int = 0,
) -> float:
    """One-sided bootstrap p-value for ``H0: dCER <= 0``.

    Args:
        model: Strategy path
        bench: Benchmark path over the same months
        gamma: Relative risk aversion
        B: Replications
        block_len: Circular block length (default ``ceil(T ** (1/3))``)
        seed: Generator seed; equal seeds give equal p-values
        net: Test returns after trading costs
        mask: Optional boolean month subset
        ddof: CER variance divisor adjustment

    Returns:
        p-value in ``[1/(B+1), 1]``

    Raises:
        ConfigError: Fewer than 199 replications
        DataError: Block length not shorter than the sample

    """
    if B < 199:
        raise ConfigError("bootstrap needs at least 199 replications", module="evaluation")
    _check_aligned(model, bench)
    a = _subset(_series(model, net), mask)
    b = _subset(_series(bench, net), mask)
    n = len(a)
    block_len = default_block_len(n) if block_len is None else block_len
    if block_len >= n:
        raise DataError(
            f"block length {block_len} is not shorter than the {n}-month sample",
            module="evaluation",
        )

    def statistic(x: np.ndarray, y: np.ndarray) -> float:
        return cer_of(x, gamma, ddof) - cer_of(y, gamma, ddof)

    observed = statistic(a, b)
    generator = np.random.Generator(np.random.PCG64(seed))
    bs = CircularBlockBootstrap(block_len, a, b, seed=generator)
    draws = bs.apply(statistic, reps=B)[:, 0]
    exceed = int(np.sum(draws - observed >= observed))
    return (1 + exceed) / (B + 1)


def state_masks(path: AllocationPath, states: StateSeries) -> dict[str, np.ndarray | None]:
    """Month subsets of a path by state.

    Up/Down use the label at the formation month (the month before each
    return); expansion/recession use the NBER label of the return month.
    None marks subsets that cannot be formed (no NBER labels).
    """
    formation = states.align(path.dates - 1).updown
    masks: dict[str, np.ndarray | None] = {"up": formation == UP, "down": formation == DOWN}
    if states.nber is None:
        masks["expansion"] = masks["recession"] = None
    else:
        recession = states.align(path.dates).is_recession
        masks["expansion"], masks["recession"] = ~recession, recession
    return {name: masks[name] for name in STATES}


def per_state_report(
    model: AllocationPath,
    bench: AllocationPath,
    states: StateSeries,
    gamma: float,
    bootstrap: BootstrapConfig | None = None,
    *,
    net: bool = True,
    ddof: int = 0,
) -> dict[str, dict[str, float | int | None]]:
    """dCER and bootstrap p-value within each market state.

    Subsets shorter than 12 months keep their dCER but get no p-value; empty
    or unavailable subsets report None.

    Returns:
        ``{state: {"dcer": ..., "pval": ..., "months": ...}}`` for expansion,
        recession, up and down

    """
    report: dict[str, dict[str, float | int | None]] = {}
    for name, mask in state_masks(model, states).items():
        entry: dict[str, float | int | None] = {"dcer": None, "pval": None, "months": 0}
        report[name] = entry
        if mask is None:
            continue
        entry["months"] = int(mask.sum())
        if not mask.any():
            logger.warning("%s: no %s months in the sample", model.name, name)
            continue
        entry["dcer"] = delta_cer(model, bench, gamma, net=net, mask=mask, label=name, ddof=ddof)
        if bootstrap is None or model is bench:
            continue
        if mask.sum() < MIN_STATE_MONTHS:
            logger.warning(
                "%s: only %d %s months; p-value suppressed", model.name, mask.sum(), name
            )
            continue
        try:
            entry["pval"] = bootstrap_dcer(
                model,
                bench,
                gamma,
                bootstrap.reps,
                bootstrap.block_len,
                bootstrap.seed,
                net=net,
                mask=mask,
                ddof=ddof,
            )
        except DataError as e:
            logger.warning("%s: %s p-value suppressed (%s)", model.name, name, e.message)
    return report


def stars(p: float | None) -> str:
    """Significance marker: ``***`` below 1%, ``**`` below 5%, ``*`` below 10%."""
    if p is None or np.isnan(p):
        return ""
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.10 else ""


@dataclass
class PerformanceReport:
    """Evaluation of one strategy against the historical-mean benchmark.

    CER and dCER values are annualised percentages; ``per_state`` holds net
    dCER values and ``cer_state`` the strategy's own net CER per state.
    """

    strategy: str
    months: int
    cer_ann: float
    cer_net: float
    dcer_ann: float
    dcer_net: float
    sharpe_m: float | None
    avg_turnover: float
    rel_turnover: float | None
    terminal_wealth: float
    per_state: dict[str, float | None] = field(default_factory=dict)
    cer_state: dict[str, float | None] = field(default_factory=dict)
    pvals: dict[str, float | None] = field(default_factory=dict)
    r2_oos: dict[str, float | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Plain dictionary for JSON export."""
        return asdict(self)


def evaluate(
    path: AllocationPath,
    bench: AllocationPath,
    states: StateSeries,
    gamma: float,
    bootstrap: BootstrapConfig | None = None,
    forecast: ForecastSeries | None = None,
    bench_forecast: ForecastSeries | None = None,
    ddof: int = 0,
) -> PerformanceReport:
    """Compute every reported statistic for one strategy.

    The overall dCER uses returns before costs; the Sharpe ratio, ``dcer_net``
    and the per-state figures use returns after costs.
    """
    is_bench = path is bench
    bootstrap = None if is_bench else bootstrap
    try:
        sharpe = sharpe_monthly(path)
    except NumericError as e:
        logger.warning(e.message)
        sharpe = None
    avg, rel = turnover_stats(path, bench) if bench.turnover.any() else (
        float(path.turnover.mean() * 100),
        None,
    )

    pvals: dict[str, float | None] = {"dcer": None, "dcer_net": None}
    if bootstrap is not None:
        for key, net in (("dcer", False), ("dcer_net", True)):
            pvals[key] = bootstrap_dcer(
                path, bench, gamma, bootstrap.reps, bootstrap.block_len, bootstrap.seed,
                net=net, ddof=ddof,
            )

    states_report = per_state_report(path, bench, states, gamma, bootstrap, net=True, ddof=ddof)
    masks = state_masks(path, states)
    cer_state = {
        name: cer(path, gamma, net=True, mask=mask, ddof=ddof)
        if mask is not None and mask.any()
        else None
        for name, mask in masks.items()
    }
    for name, entry in states_report.items():
        pvals[name] = entry["pval"]

    r2: dict[str, float | None] = {}
    if forecast is not None and bench_forecast is not None and forecast is not bench_forecast:
        r2["all"] = r2_oos(forecast, bench_forecast)
        for label in (UP, DOWN):
            mask = forecast.state == label
            r2[label.lower()] = r2_oos(forecast, bench_forecast, mask) if mask.any() else None

    return PerformanceReport(
        strategy=path.name,
        months=len(path),
        cer_ann=cer(path, gamma, net=False, ddof=ddof),
        cer_net=cer(path, gamma, net=True, ddof=ddof),
        dcer_ann=delta_cer(path, bench, gamma, net=False, ddof=ddof),
        dcer_net=delta_cer(path, bench, gamma, net=True, ddof=ddof),
        sharpe_m=sharpe,
        avg_turnover=avg,
        rel_turnover=rel,
        terminal_wealth=float(path.wealth[-1]),
        per_state={name: entry["dcer"] for name, entry in states_report.items()},
        cer_state=cer_state,
        pvals=pvals,
        r2_oos=r2,
    )


def summary_frame(reports: list[PerformanceReport], benchmark: str) -> pd.DataFrame:
    """Results table with one row per strategy.

    The benchmark row carries its own CER levels and average turnover, as a
    reference for the dCER columns of the other rows.
    """
    rows = []
    for report in reports:
        is_bench = report.strategy == benchmark
        per_state = report.cer_state if is_bench else report.per_state
        rows.append(
            {
                "predictor": report.strategy,
                "dcer": report.cer_ann if is_bench else report.dcer_ann,
                "sr": report.sharpe_m,
                "rel_turnover": report.avg_turnover if is_bench else report.rel_turnover,
                "dcer_net": report.cer_net if is_bench else report.dcer_net,
                "dcer_exp": per_state.get("expansion"),
                "dcer_rec": per_state.get("recession"),
                "dcer_up": per_state.get("up"),
                "dcer_down": per_state.get("down"),
                "stars": "" if is_bench else stars(report.pvals.get("dcer")),
            }
        )
    return pd.DataFrame(rows)
