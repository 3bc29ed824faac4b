"""Test source ingestion and predictor derivation."""

import numpy as np
import pandas as pd
import pytest

from regimealloc.errors import DataError, FormatError, SchemaError
from regimealloc.ingest import (
    PREDICTORS,
    IngestConfig,
    derive_predictors,
    load_panel,
    load_schema,
    parse_yyyymm,
    read_panel_csv,
    write_panel_csv,
)


def _column(panel, name):
    return panel.X[:, panel.names.index(name)]


def test_parse_yyyymm():
    """Test integer and string months parse to the same period."""
    assert parse_yyyymm(198001) == pd.Period("1980-01", "M")
    assert parse_yyyymm("202009") == pd.Period("2020-09", "M")
    with pytest.raises(FormatError):
        parse_yyyymm("198013")


def test_load_panel_1950_to_2020(goyal_csv):
    """Test a 1950:01-2020:09 request yields 849 months."""
    path = goyal_csv("1949-12", "2020-09")
    panel = load_panel(path, start=195001)
    assert panel.T == 849
    assert panel.dates[0] == pd.Period("1950-01", "M")
    assert panel.names == PREDICTORS


def test_load_panel_1960_to_2020(goyal_csv):
    """Test a 1960:01-2020:09 request yields 729 months."""
    path = goyal_csv("1949-12", "2020-09")
    assert load_panel(path, start=196001).T == 729


def test_load_panel_trims_lag_month(goyal_csv):
    """Test the first file month only serves as lag history."""
    path = goyal_csv("1950-01", "1950-12")
    panel = load_panel(path)
    assert panel.dates[0] == pd.Period("1950-02", "M")
    assert panel.T == 11


def test_missing_column_names_it(goyal_csv):
    """Test a missing lty column raises a schema error naming lty."""
    path = goyal_csv(edit=lambda f: f.drop(columns=["lty"]))
    with pytest.raises(SchemaError, match="lty"):
        load_panel(path)


def test_non_monotone_dates(goyal_csv):
    """Test swapped months raise a format error."""

    def swap(frame):
        frame.loc[[3, 4], "yyyymm"] = frame.loc[[4, 3], "yyyymm"].to_numpy()
        return frame

    with pytest.raises(FormatError):
        load_panel(goyal_csv(edit=swap))


def test_date_gap(goyal_csv):
    """Test a skipped month raises a format error naming both months."""
    path = goyal_csv(edit=lambda f: f.drop(index=5))
    with pytest.raises(FormatError, match="between"):
        load_panel(path)


def test_unparseable_cell_reports_date(goyal_csv):
    """Test a bad cell is reported with its month."""

    def corrupt(frame):
        frame["ntis"] = frame["ntis"].astype(object)
        frame.loc[10, "ntis"] = "n/a?"
        return frame

    with pytest.raises(DataError) as info:
        load_panel(goyal_csv(edit=corrupt))
    assert info.value.yyyymm == "195010"


def test_unparseable_cell_outside_range_is_ignored(goyal_csv):
    """Test cells outside the requested months are not parsed into the panel."""

    def corrupt(frame):
        frame["ntis"] = frame["ntis"].astype(object)
        frame.loc[len(frame) - 1, "ntis"] = "bad"
        return frame

    panel = load_panel(goyal_csv(edit=corrupt), end=195106)
    assert panel.dates[-1] == pd.Period("1951-06", "M")


def test_default_spread(raw_frame):
    """Test dfy is BAA minus AAA."""
    raw = raw_frame.copy()
    raw["aaa"], raw["baa"] = 0.05, 0.07
    panel = derive_predictors(raw)
    assert _column(panel, "dfy") == pytest.approx(np.full(panel.T, 0.02))


def test_equal_market_and_bill_returns(raw_frame):
    """Test crsp_vw equal to rfree gives zero excess returns."""
    raw = raw_frame.copy()
    raw["crsp_vw"] = raw["rfree"]
    panel = derive_predictors(raw)
    assert (panel.r_log == 0).all()
    assert (panel.r_simple == 0).all()


def test_inverted_slope(raw_frame):
    """Test y10 below tbl gives a negative slope."""
    raw = raw_frame.copy()
    raw["y10"], raw["tbl"] = 0.015, 0.020
    panel = derive_predictors(raw)
    assert panel.slope == pytest.approx(np.full(panel.T, -0.005))


def test_lagged_predictors(raw_frame):
    """Test dy, infl and lep use the previous month."""
    raw = raw_frame.copy()
    panel = derive_predictors(raw)
    log_sp = np.log(raw["sp_index"].to_numpy())
    log_d12 = np.log(raw["d12"].to_numpy())
    assert _column(panel, "dy") == pytest.approx(log_d12[1:] - log_sp[:-1])
    assert _column(panel, "infl") == pytest.approx(raw["infl"].to_numpy()[:-1])
    assert _column(panel, "lep")[1:] == pytest.approx(panel.r_log[:-1])


def test_unlagged_inflation(raw_frame):
    """Test the inflation lag can be switched off."""
    raw = raw_frame.copy()
    panel = derive_predictors(raw, IngestConfig(infl_lag=False))
    assert _column(panel, "infl") == pytest.approx(raw["infl"].to_numpy()[1:])


def test_difference_excess_return(raw_frame):
    """Test the difference form of the simple excess return."""
    raw = raw_frame.copy()
    panel = derive_predictors(raw, IngestConfig(excess_return="difference"))
    expected = (raw["crsp_vw"] - raw["rfree"]).to_numpy()[1:]
    assert panel.r_simple == pytest.approx(expected)


def test_later_rows_never_change_earlier_months(raw_frame):
    """Test perturbing raw rows after a month leaves that month's panel values alone."""
    t = pd.Period("1950-06", "M")
    later = raw_frame.copy()
    later.loc[later.index > t] *= 1.1
    base, moved = derive_predictors(raw_frame), derive_predictors(later)
    upto = base.dates <= t
    assert np.array_equal(base.X[upto], moved.X[upto])
    assert np.array_equal(base.r_simple[upto], moved.r_simple[upto])
    assert np.array_equal(base.slope[upto], moved.slope[upto])
    assert not np.array_equal(base.X[~upto], moved.X[~upto])


def test_price_rescaling_shifts_valuation_ratios(raw_frame):
    """Test scaling sp_index moves dp, dy and ep by a constant and nothing else."""
    scaled = raw_frame.copy()
    scaled["sp_index"] *= 3.0
    base, moved = derive_predictors(raw_frame), derive_predictors(scaled)
    for name in ("dp", "dy", "ep"):
        assert _column(base, name) - _column(moved, name) == pytest.approx(
            np.full(base.T, np.log(3.0))
        )
    for name in ("tms", "dfy", "dfr"):
        assert np.array_equal(_column(base, name), _column(moved, name))
    assert np.array_equal(base.slope, moved.slope)


def test_nonpositive_dividend_reports_date(raw_frame):
    """Test a negative d12 raises a data error with the month."""
    raw = raw_frame.copy()
    raw.iloc[4, raw.columns.get_loc("d12")] = -1.0
    with pytest.raises(DataError) as info:
        derive_predictors(raw)
    assert info.value.date == raw.index[4]


def test_hole_inside_sample(raw_frame):
    """Test a missing value after the first complete month is an error."""
    raw = raw_frame.copy()
    raw.iloc[6, raw.columns.get_loc("ntis")] = np.nan
    with pytest.raises(DataError, match="ntis"):
        derive_predictors(raw)


def test_schema_map_renames_columns(goyal_csv, tmp_path):
    """Test a schema file maps renamed source columns."""
    path = goyal_csv(edit=lambda f: f.rename(columns={"lty": "LongYield"}))
    schema_path = tmp_path / "schema.toml"
    schema_path.write_text('[columns]\nlty = "LongYield"\n')
    panel = load_panel(path, load_schema(schema_path))
    assert panel.T == 36


def test_schema_unknown_key(tmp_path):
    """Test unknown canonical names in a schema file are rejected."""
    schema_path = tmp_path / "schema.toml"
    schema_path.write_text('[columns]\nfoo = "bar"\n')
    with pytest.raises(SchemaError, match="foo"):
        load_schema(schema_path)


def test_panel_csv_round_trip(goyal_csv, tmp_path):
    """Test a written panel reads back bit for bit."""
    panel = load_panel(goyal_csv())
    out = tmp_path / "panel.csv"
    write_panel_csv(panel, out)
    restored = read_panel_csv(out)
    assert restored.names == panel.names
    assert restored.dates.equals(panel.dates)
    assert np.array_equal(restored.X, panel.X)
    assert np.array_equal(restored.r_simple, panel.r_simple)


def test_load_panel_detects_panel_files(goyal_csv, tmp_path):
    """Test load_panel reads derived panel files and applies the range."""
    panel = load_panel(goyal_csv())
    out = tmp_path / "panel.csv"
    write_panel_csv(panel, out)
    restored = load_panel(out, start=195006, end=195105)
    assert restored.T == 12
    assert np.array_equal(restored.market, panel.slice(195006, 195105).market)


def test_panel_is_read_only(goyal_csv):
    """Test panel arrays cannot be modified in place."""
    panel = load_panel(goyal_csv())
    with pytest.raises(ValueError):
        panel.X[0, 0] = 1.0


def test_position_outside_panel(goyal_csv):
    """Test looking up a month outside the panel is a data error."""
    panel = load_panel(goyal_csv())
    with pytest.raises(DataError):
        panel.position(199001)

