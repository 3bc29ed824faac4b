"""Test the synthetic data generator."""

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
import statsmodels.api as sm

from regimealloc.errors import ConfigError
from regimealloc.ingest import load_panel
from regimealloc.states import DOWN, classify_updown
from regimealloc.synth import SynthSpec, generate, load_synth_spec, write_synth


def test_noiseless_single_predictor_is_the_factor():
    """Test zero noise with one unit loading reproduces the factor."""
    panel, _, truth = generate(SynthSpec(T=120, n_pred=1, noise_sd=0.0, seed=2))
    assert np.array_equal(panel.X[:, 0], truth.mu)


def test_same_seed_same_panel():
    """Test generation is deterministic for a seed."""
    a, _, _ = generate(SynthSpec(T=150, seed=9))
    b, _, _ = generate(SynthSpec(T=150, seed=9))
    c, _, _ = generate(SynthSpec(T=150, seed=10))
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.r_simple, b.r_simple)
    assert not np.array_equal(a.X, c.X)


def test_slope_reproduces_states(synth_data):
    """Test classifying the generated slope recovers the planted states."""
    panel, states, truth = synth_data
    assert np.array_equal(classify_updown(panel.slope, panel.dates).updown, states.updown)
    assert np.array_equal(states.updown, truth.states)


def test_panel_layout(synth_data):
    """Test names, dates and the market identity of the generated panel."""
    panel, _, _ = synth_data
    assert panel.names == tuple(f"x{i}" for i in range(1, 17))
    assert panel.dates[0] == pd.Period("1950-01", "M")
    assert panel.T == 240
    assert panel.market == pytest.approx((1 + panel.r_simple) * (1 + panel.rf) - 1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"T": 100},
        {"n_pred": 0},
        {"phi": 1.0},
        {"noise_sd": -0.1},
        {"rf": -1.0},
        {"n_pred": 3, "loadings": (1.0, 2.0)},
        {"transition": ((0.9, 0.2), (0.1, 0.9))},
        {"transition": ((1.2, -0.2), (0.1, 0.9))},
        {"start": "195013"},
    ],
)
def test_invalid_spec(kwargs):
    """Test impossible processes are configuration errors."""
    with pytest.raises(ConfigError):
        SynthSpec(**kwargs)


def test_stationary_state_frequency():
    """Test the long-run Down share matches the chain's stationary law."""
    spec = SynthSpec(T=5000, transition=((0.7, 0.3), (0.6, 0.4)), seed=5)
    _, states, _ = generate(spec)
    p_down = spec.stationary[1]
    assert p_down == pytest.approx(1 / 3)
    share = (states.updown == DOWN).mean()
    lam = 1 - 0.3 - 0.6
    se = np.sqrt(p_down * (1 - p_down) / spec.T * (1 + lam) / (1 - lam))
    assert abs(share - p_down) < 3 * se


def test_implied_correlation():
    """Test each predictor's sample correlation with the factor matches its population value."""
    spec = SynthSpec(T=5000, phi=0.5, n_pred=4, loadings=(0.5, 1.0, -1.0, 2.0), noise_sd=0.01, seed=6)
    panel, _, truth = generate(spec)
    sample = [np.corrcoef(panel.X[:, i], truth.mu)[0, 1] for i in range(4)]
    assert sample == pytest.approx(spec.implied_corr(), abs=0.05)


def test_equal_regime_slopes_recovered():
    """Test with equal slopes the pooled regression recovers them."""
    spec = SynthSpec(T=3000, beta_up=0.6, beta_dn=0.6, seed=8)
    panel, _, truth = generate(spec)
    result = sm.OLS(panel.r_simple[1:], sm.add_constant(truth.mu[:-1])).fit()
    assert abs(result.params[1] - 0.6) < 3 * result.bse[1]


def test_default_loadings_spread():
    """Test default loadings are evenly spaced and sized to n_pred."""
    spec = SynthSpec(n_pred=5)
    assert spec.loadings == pytest.approx((-1.5, -0.75, 0.0, 0.75, 1.5))
    assert SynthSpec(n_pred=1).loadings == (1.0,)


def test_load_synth_spec(tmp_path):
    """Test a [synth] table overrides the defaults."""
    path = tmp_path / "synth.toml"
    path.write_text(
        "[synth]\nT = 300\nn_pred = 2\nloadings = [1.0, -1.0]\n"
        "transition = [[0.9, 0.1], [0.2, 0.8]]\nstart = 196001\nseed = 4\n"
    )
    spec = load_synth_spec(path)
    assert spec.T == 300
    assert spec.loadings == (1.0, -1.0)
    assert spec.transition == ((0.9, 0.1), (0.2, 0.8))
    assert spec.start == pd.Period("1960-01", "M")


def test_load_synth_spec_unknown_key(tmp_path):
    """Test unknown keys are configuration errors."""
    path = tmp_path / "synth.toml"
    path.write_text("months = 300\n")
    with pytest.raises(ConfigError):
        load_synth_spec(path)


def test_write_synth_reads_back(tmp_path):
    """Test a written synthetic panel loads with the regular reader."""
    spec = replace(SynthSpec(T=130, seed=3), n_pred=2, loadings=(1.0, -1.0))
    out, truth_path = write_synth(spec, tmp_path / "data" / "synth.csv")
    panel = load_panel(out)
    expected, _, _ = generate(spec)
    assert panel.T == 130
    assert np.array_equal(panel.X, expected.X)
    truth = pd.read_csv(truth_path)
    assert list(truth.columns) == ["yyyymm", "mu", "state"]
    assert truth["yyyymm"].iloc[0] == 195001
