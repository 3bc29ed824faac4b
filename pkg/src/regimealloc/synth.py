"""Synthetic panels with a planted two-state predictive relation.

A latent factor follows an AR(1), every predictor loads on it with noise, and
a two-state Markov chain switches the slope of next-month returns on the
factor. The yield-curve slope is drawn on the correct side of zero for each
state, so ``classify_updown`` recovers the planted states exactly.

Draws come from numpy's PCG64 generator, whose stream is fixed for a given
seed across platforms and numpy versions.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import BacktestError, ConfigError
from .ingest import PredictorPanel, parse_yyyymm, to_yyyymm, write_panel_csv
from .states import DOWN, UP, StateSeries

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

RNG_NAME = "PCG64"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic data-generating process.

    Attributes:
        T: Months to generate (at least 120)
        n_pred: Number of predictors
        phi: AR(1) coefficient of the latent factor
        loadings: Exposure of each predictor to the factor (default evenly
            spaced over [-1.5, 1.5])
        noise_sd: Idiosyncratic predictor noise SD
        mu_sd: Innovation SD of the latent factor
        ret_noise_sd: SD of the return shock
        premium: Unconditional mean excess return
        beta_up: Return slope on the factor in Up months
        beta_dn: Return slope on the factor in Down months
        transition: Row-stochastic ``[[Up->Up, Up->Down], [Down->Up, Down->Down]]``
        rf: Constant monthly risk-free return
        start: First month
        seed: Generator seed

    """

    T: int = 600
    n_pred: int = 16
    phi: float = 0.9
    loadings: tuple[float, ...] | None = None
    noise_sd: float = 0.02
    mu_sd: float = 0.01
    ret_noise_sd: float = 0.04
    premium: float = 0.005
    beta_up: float = 0.8
    beta_dn: float = -0.4
    transition: tuple[tuple[float, float], tuple[float, float]] = (
        (0.97, 0.03),
        (0.15, 0.85),
    )
    rf: float = 0.003
    start: pd.Period = field(default_factory=lambda: pd.Period("1950-01", "M"))
    seed: int = 0

    def __post_init__(self):
        """Validate the process and fill in default loadings."""
        if self.T < 120:
            raise ConfigError(f"T must be at least 120, got {self.T}", module="synth")
        if self.n_pred < 1:
            raise ConfigError("n_pred must be positive", module="synth")
        if not abs(self.phi) < 1:
            raise ConfigError(f"AR(1) coefficient {self.phi} is not stationary", module="synth")
        for name in ("noise_sd", "mu_sd", "ret_noise_sd"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative", module="synth")
        if self.rf <= -1:
            raise ConfigError("rf must exceed -1", module="synth")
        loadings = self.loadings
        if loadings is None:
            loadings = np.linspace(-1.5, 1.5, self.n_pred) if self.n_pred > 1 else (1.0,)
        loadings = tuple(float(x) for x in loadings)
        if len(loadings) != self.n_pred:
            raise ConfigError(
                f"{len(loadings)} loadings for {self.n_pred} predictors", module="synth"
            )
        object.__setattr__(self, "loadings", loadings)
        P = np.asarray(self.transition, dtype=np.float64)
        if P.shape != (2, 2) or (P < 0).any() or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
            raise ConfigError("transition must be a 2x2 row-stochastic matrix", module="synth")
        object.__setattr__(self, "transition", tuple(tuple(float(p) for p in row) for row in P))
        try:
            object.__setattr__(self, "start", parse_yyyymm(self.start))
        except BacktestError as e:
            raise ConfigError(f"start: {e.message}", module="synth")

    @property
    def stationary(self) -> np.ndarray:
        """Long-run ``[P(Up), P(Down)]`` of the state chain."""
        (_, p_ud), (p_du, _) = self.transition
        total = p_ud + p_du
        if total == 0:
            return np.array([1.0, 0.0])
        return np.array([p_du / total, p_ud / total])

    @property
    def factor_sd(self) -> float:
        """Stationary standard deviation of the latent factor."""
        return self.mu_sd / np.sqrt(1 - self.phi**2)

    def implied_corr(self) -> np.ndarray:
        """Population correlation of each predictor with the factor."""
        signal = np.asarray(self.loadings) * self.factor_sd
        total = np.sqrt(signal**2 + self.noise_sd**2)
        return np.divide(signal, total, out=np.zeros_like(signal), where=total > 0)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """The latent quantities behind a synthetic panel."""

    dates: pd.PeriodIndex
    mu: np.ndarray
    states: np.ndarray
    beta_up: float
    beta_dn: float
    premium: float

    def to_frame(self) -> pd.DataFrame:
        """``yyyymm,mu,state`` table."""
        return pd.DataFrame(
            {"yyyymm": to_yyyymm(self.dates), "mu": self.mu, "state": self.states}
        )


def generate(spec: SynthSpec) -> tuple[PredictorPanel, StateSeries, GroundTruth]:
    """Draw a panel, its states and the latent truth.

    Row ``t`` of the panel holds ``x[t] = loadings * mu[t] + noise`` and the
    excess return realised over month ``t``,
    ``r[t] = premium + beta(s[t-1]) * mu[t-1] + e[t]`` (the first row has no
    predictable part).

    Args:
        spec: Process parameters

    Returns:
        Panel, Up/Down states and ground truth

    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    T = spec.T
    P = np.asarray(spec.transition)

    mu = np.empty(T)
    mu[0] = spec.factor_sd * rng.standard_normal()
    shocks = spec.mu_sd * rng.standard_normal(T)
    for t in range(1, T):
        mu[t] = spec.phi * mu[t - 1] + shocks[t]

    down = np.empty(T, dtype=bool)
    draws = rng.random(T)
    down[0] = draws[0] < spec.stationary[1]
    for t in range(1, T):
        down[t] = draws[t] < P[int(down[t - 1]), 1]

    noise = spec.noise_sd * rng.standard_normal((T, spec.n_pred))
    X = mu[:, None] * np.asarray(spec.loadings)[None, :] + noise

    beta = np.where(down, spec.beta_dn, spec.beta_up)
    r_simple = spec.premium + spec.ret_noise_sd * rng.standard_normal(T)
    r_simple[1:] += beta[:-1] * mu[:-1]

    magnitude = np.abs(rng.standard_normal(T))
    slope = np.where(down, -(0.001 + 0.005 * magnitude), 0.005 + 0.01 * magnitude)

    rf = np.full(T, spec.rf)
    market = (1 + r_simple) * (1 + rf) - 1
    dates = pd.period_range(spec.start, periods=T, freq="M")
    labels = np.where(down, DOWN, UP).astype(object)

    panel = PredictorPanel(
        dates=dates,
        X=X,
        names=tuple(f"x{i + 1}" for i in range(spec.n_pred)),
        r_log=np.log1p(market) - np.log1p(rf),
        r_simple=r_simple,
        slope=slope,
        rf=rf,
        market=market,
        source=f"synth:{RNG_NAME}:{spec.seed}",
    )
    truth = GroundTruth(
        dates=dates,
        mu=mu,
        states=labels,
        beta_up=spec.beta_up,
        beta_dn=spec.beta_dn,
        premium=spec.premium,
    )
    logger.info(
        "generated %d months, %.1f%% Down, seed %d", T, 100 * down.mean(), spec.seed
    )
    return panel, StateSeries(dates=dates, updown=labels), truth


def load_synth_spec(path: str | PathLike) -> SynthSpec:
    """Read a SynthSpec from TOML (a ``[synth]`` table or top-level keys).

    Raises:
        ConfigError: Unknown keys or invalid values

    """
    with open(path, "rb") as f:
        document = tomllib.load(f)
    values = dict(document.get("synth", document))
    if "loadings" in values:
        values["loadings"] = tuple(values["loadings"])
    if "transition" in values:
        values["transition"] = tuple(tuple(row) for row in values["transition"])
    try:
        return SynthSpec(**values)
    except TypeError as e:
        raise ConfigError(f"invalid synth spec: {e}", module="synth")


def write_synth(spec: SynthSpec, out: str | PathLike) -> tuple[Path, Path]:
    """Generate and write the panel CSV plus a ``<stem>_truth.csv`` sidecar.

    Returns:
        Paths of the panel and ground-truth files

    """
    panel, _, truth = generate(spec)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_panel_csv(panel, out)
    truth_path = out.with_name(f"{out.stem}_truth.csv")
    truth.to_frame().to_csv(truth_path, index=False, float_format="%.17g")
    return out, truth_path
