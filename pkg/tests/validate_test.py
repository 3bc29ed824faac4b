"""Test source-file validation."""

import pandas as pd
import pytest

from regimealloc.ingest import write_panel_csv
from regimealloc.synth import SynthSpec, generate
from regimealloc.validate import check_dates, validate_file


def test_clean_file(goyal_csv):
    """Test a well-formed file has no issues."""
    assert validate_file(goyal_csv()) == []


def test_clean_panel_file(tmp_path):
    """Test a derived panel file is checked against its own columns."""
    panel, _, _ = generate(SynthSpec(T=120, n_pred=3, seed=0))
    path = tmp_path / "panel.csv"
    write_panel_csv(panel, path)
    assert validate_file(path) == []


def test_gap_names_both_months(goyal_csv):
    """Test a skipped month is reported with its neighbours."""
    issues = validate_file(goyal_csv(edit=lambda f: f.drop(index=5)))
    assert [i.kind for i in issues] == ["date_gap"]
    assert "between 195004 and 195006" in issues[0].message


def test_negative_dividends(goyal_csv):
    """Test a negative D12 is flagged with its month."""

    def corrupt(frame):
        frame.loc[3, "D12"] = -1.0
        return frame

    issues = validate_file(goyal_csv(edit=corrupt))
    assert len(issues) == 1
    assert issues[0].kind == "nonpositive"
    assert issues[0].date == "195003"
    assert issues[0].column == "D12"


def test_missing_column(goyal_csv):
    """Test a missing column is reported by name."""
    issues = validate_file(goyal_csv(edit=lambda f: f.drop(columns=["lty"])))
    assert [i.kind for i in issues] == ["missing_column"]
    assert "lty" in str(issues[0])


def test_collects_every_problem(goyal_csv):
    """Test validation keeps going after the first problem."""

    def corrupt(frame):
        frame["ntis"] = frame["ntis"].astype(object)
        frame.loc[10, "ntis"] = "n/a?"
        frame.loc[12, "E12"] = 0.0
        return frame.drop(columns=["lty"])

    kinds = sorted(i.kind for i in validate_file(goyal_csv(edit=corrupt)))
    assert kinds == ["missing_column", "nonpositive", "unparseable"]


def test_unparseable_cell_date(goyal_csv):
    """Test an unparseable cell is reported with its month."""

    def corrupt(frame):
        frame["ntis"] = frame["ntis"].astype(object)
        frame.loc[10, "ntis"] = "n/a?"
        return frame

    (issue,) = validate_file(goyal_csv(edit=corrupt))
    assert issue.kind == "unparseable"
    assert issue.date == "195010"


@pytest.mark.parametrize(
    "values, kind",
    [
        (["195001", "195002", "195002"], "date_order"),
        (["195001", "19502", "195002"], "bad_date"),
    ],
)
def test_check_dates(values, kind):
    """Test duplicate and unparseable months."""
    issues = check_dates(pd.Series(values))
    assert [i.kind for i in issues] == [kind]


def test_missing_file(tmp_path):
    """Test an unreadable file raises OSError."""
    with pytest.raises(OSError):
        validate_file(tmp_path / "absent.csv")
