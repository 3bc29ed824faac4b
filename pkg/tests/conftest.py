"""Shared fixtures: raw source files, hand-built panels and synthetic data."""

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from regimealloc.forecast import ForecastSeries
from regimealloc.ingest import DEFAULT_SCHEMA, PredictorPanel
from regimealloc.states import UP
from regimealloc.synth import SynthSpec, generate


def goyal_frame(start: str, end: str, seed: int = 0) -> pd.DataFrame:
    """Plausible Goyal-format monthly rows between two months."""
    dates = pd.period_range(start, end, freq="M")
    n = len(dates)
    rng = np.random.default_rng(seed)
    ret = 0.008 + 0.04 * rng.standard_normal(n)
    return pd.DataFrame(
        {
            "yyyymm": dates.year * 100 + dates.month,
            "Index": 100 * np.exp(np.cumsum(ret)),
            "D12": 3 + 0.1 * rng.random(n),
            "E12": 6 + 0.5 * rng.random(n),
            "b/m": 0.5 + 0.1 * rng.random(n),
            "tbl": 0.04 + 0.01 * rng.random(n),
            "lty": 0.06 + 0.01 * rng.random(n),
            "ltr": 0.005 + 0.02 * rng.standard_normal(n),
            "AAA": 0.05 + 0.005 * rng.random(n),
            "BAA": 0.07 + 0.005 * rng.random(n),
            "corpr": 0.005 + 0.02 * rng.standard_normal(n),
            "ntis": 0.01 * rng.standard_normal(n),
            "infl": 0.003 + 0.002 * rng.standard_normal(n),
            "rvol": 0.15 + 0.02 * rng.random(n),
            "CRSP_SPvw": ret + 0.002,
            "Rfree": 0.004 + 0.001 * rng.random(n),
            "y10": 0.05 + 0.02 * rng.standard_normal(n),
        }
    )


@pytest.fixture
def goyal_csv(tmp_path):
    """Write a Goyal-format CSV, optionally editing the frame first."""

    def write(start="1949-12", end="1952-12", edit=None, name="goyal.csv"):
        frame = goyal_frame(start, end)
        if edit is not None:
            frame = edit(frame)
        path = tmp_path / name
        frame.to_csv(path, index=False)
        return path

    return write


@pytest.fixture
def raw_frame():
    """Numeric canonical raw columns for 1949:12-1950:12."""
    frame = goyal_frame("1949-12", "1950-12")
    frame = frame.rename(columns={v: k for k, v in DEFAULT_SCHEMA.items()})
    frame.index = pd.PeriodIndex(pd.period_range("1949-12", "1950-12", freq="M"))
    return frame.drop(columns="date")


@pytest.fixture
def make_panel():
    """Build a PredictorPanel from a return vector and optional series."""

    def make(r_simple, X=None, start="1950-01", rf=None, market=None, slope=None):
        r = np.asarray(r_simple, dtype=np.float64)
        T = len(r)
        if X is None:
            X = np.random.default_rng(7).standard_normal((T, 2))
        X = np.asarray(X, dtype=np.float64).reshape(T, -1)
        rf = np.zeros(T) if rf is None else np.asarray(rf, dtype=np.float64)
        market = (1 + r) * (1 + rf) - 1 if market is None else np.asarray(market, dtype=np.float64)
        slope = np.full(T, 0.01) if slope is None else np.asarray(slope, dtype=np.float64)
        return PredictorPanel(
            dates=pd.period_range(start, periods=T, freq="M"),
            X=X,
            names=tuple(f"x{i + 1}" for i in range(X.shape[1])),
            r_log=np.log1p(market) - np.log1p(rf),
            r_simple=r,
            slope=slope,
            rf=rf,
            market=market,
        )

    return make


@pytest.fixture
def make_forecast():
    """Wrap forecasts for target months of a panel in a ForecastSeries."""

    def make(panel, fhat, start, name="pls"):
        fhat = np.asarray(fhat, dtype=np.float64)
        dates = pd.period_range(start, periods=len(fhat), freq="M")
        rows = [panel.position(d) for d in dates]
        return ForecastSeries(
            model="one-state",
            method=name,
            dates=dates,
            fhat=fhat,
            realized=panel.r_simple[rows],
            state=np.array([UP] * len(fhat), dtype=object),
            coefficients=pd.DataFrame(index=dates),
        )

    return make


@pytest.fixture(scope="session")
def synth_data():
    """A 240-month synthetic panel with states and ground truth."""
    return generate(SynthSpec(T=240, seed=1))


@pytest.fixture(scope="session")
def factor_data():
    """600-month one-factor panel with mixed-sign loadings and equal regime slopes."""
    base = SynthSpec(
        T=600,
        beta_up=1.0,
        beta_dn=1.0,
        seed=3,
    )
    return generate(replace(base, noise_sd=base.factor_sd))
