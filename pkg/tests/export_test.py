"""Test result files, the manifest and the console table."""

import json

import numpy as np
import pandas as pd
from rich.console import Console

from regimealloc.allocation import run_allocation
from regimealloc.config import RunConfig, load_config
from regimealloc.evaluation import PerformanceReport
from regimealloc.export import (
    SUMMARY_COLUMNS,
    build_manifest,
    file_sha256,
    render_summary,
    write_path,
    write_report,
    write_summary,
)


def _report(name, dcer=1.0):
    return PerformanceReport(
        strategy=name,
        months=120,
        cer_ann=7.5,
        cer_net=7.0,
        dcer_ann=dcer,
        dcer_net=dcer - 0.5,
        sharpe_m=float("nan"),
        avg_turnover=2.0,
        rel_turnover=1.5,
        terminal_wealth=3.2,
        per_state={"up": 0.4, "down": None},
        pvals={"dcer": 0.03},
    )


def _summary():
    return pd.DataFrame(
        [
            {"predictor": "histmean", "dcer": 7.5, "sr": 0.13, "rel_turnover": 2.0,
             "dcer_net": 7.0, "dcer_exp": None, "dcer_rec": None, "dcer_up": 7.9,
             "dcer_down": 4.1, "stars": ""},
            {"predictor": "pls-switching", "dcer": 6.1, "sr": 0.25, "rel_turnover": 3.1,
             "dcer_net": 5.2, "dcer_exp": None, "dcer_rec": None, "dcer_up": 4.0,
             "dcer_down": 15.3, "stars": "***"},
        ]
    )


def test_report_nan_becomes_null(tmp_path):
    """Test non-finite statistics are written as JSON null."""
    path = write_report([_report("pls-switching")], tmp_path)
    document = json.loads(path.read_text())
    assert document["pls-switching"]["sharpe_m"] is None
    assert document["pls-switching"]["per_state"]["down"] is None
    assert document["pls-switching"]["pvals"]["dcer"] == 0.03


def test_summary_column_order(tmp_path):
    """Test summary.csv keeps the fixed column order."""
    frame = _summary()
    path = write_summary(frame[list(reversed(frame.columns))], tmp_path)
    assert tuple(pd.read_csv(path).columns) == SUMMARY_COLUMNS


def test_path_file(tmp_path, make_panel, make_forecast):
    """Test a path is written under paths/ with its strategy name."""
    panel = make_panel(np.random.default_rng(0).normal(0.005, 0.04, 80))
    path = run_allocation(make_forecast(panel, np.full(6, 0.004), "1955-06"), panel)
    out = write_path(path, tmp_path)
    assert out == tmp_path / "paths" / "pls-one-state.csv"
    assert len(pd.read_csv(out)) == 6


def test_manifest_hashes(tmp_path):
    """Test the manifest hashes the inputs and every artifact."""
    data = tmp_path / "data.csv"
    data.write_text("yyyymm\n198001\n")
    out = tmp_path / "out"
    cfg = load_config(overrides={"data": {"path": str(data)}, "output": {"dir": str(out)}})
    artifact = write_report([_report("pca-one-state")], out)
    manifest = build_manifest(cfg, [artifact])
    assert manifest["inputs_sha256"] == {"data": file_sha256(data)}
    assert manifest["artifacts_sha256"] == {"report.json": file_sha256(artifact)}
    assert manifest["config_sha256"] == cfg.digest()
    assert manifest["rng"] == "PCG64"
    assert "numpy" in manifest["versions"]


def test_manifest_config_months():
    """Test the manifest records months as YYYYMM."""
    manifest = build_manifest(RunConfig(), [])
    assert manifest["config"]["sample"]["oos_end"] == "202009"


def test_render_summary():
    """Test the console table lists every strategy with its stars."""
    console = Console(record=True, width=160)
    render_summary(_summary(), console)
    text = console.export_text()
    assert "pls-switching" in text
    assert "6.10***" in text
