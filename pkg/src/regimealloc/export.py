"""Result files and the console summary of a backtest.

Layout of an output directory::

    paths/<strategy>.csv      monthly weights, returns and wealth
    forecasts/<strategy>.csv  forecasts, realisations, states, coefficients
    loadings/<strategy>.csv   per-date index loadings (PLS and PCA)
    summary.csv               one row per strategy
    report.json               every PerformanceReport
    manifest.json             hashes and versions for reproducing the run
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from os import PathLike
from pathlib import Path

import pandas as pd
from rich.console import Console
from rich.table import Table

from .allocation import AllocationPath
from .config import RunConfig
from .evaluation import PerformanceReport
from .forecast import ForecastSeries
from .synth import RNG_NAME

FLOAT_FORMAT = "%.10g"
PACKAGES = ("regimealloc", "numpy", "pandas", "statsmodels", "scikit-learn", "arch", "rich")
SUMMARY_COLUMNS = (
    "predictor",
    "dcer",
    "sr",
    "rel_turnover",
    "dcer_net",
    "dcer_exp",
    "dcer_rec",
    "dcer_up",
    "dcer_down",
    "stars",
)


def _csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_path(path: AllocationPath, out_dir: str | PathLike) -> Path:
    """Write ``paths/<name>.csv``."""
    return _csv(path.to_frame(), Path(out_dir) / "paths" / f"{path.name}.csv")


def write_forecast(f: ForecastSeries, out_dir: str | PathLike) -> Path:
    """Write ``forecasts/<name>.csv`` with the per-date coefficients appended."""
    frame = f.to_frame()
    coefficients = f.coefficients.reset_index(drop=True)
    frame = pd.concat([frame, coefficients], axis=1)
    return _csv(frame, Path(out_dir) / "forecasts" / f"{f.name}.csv")


def write_loadings(f: ForecastSeries, out_dir: str | PathLike) -> Path | None:
    """Write ``loadings/<name>.csv``; None when the strategy has no loadings."""
    if f.index is None or f.index.loadings.shape[1] == 0:
        return None
    return _csv(f.index.loadings_frame(), Path(out_dir) / "loadings" / f"{f.name}.csv")


def write_summary(frame: pd.DataFrame, out_dir: str | PathLike) -> Path:
    """Write ``summary.csv`` in the fixed column order."""
    return _csv(frame.loc[:, list(SUMMARY_COLUMNS)], Path(out_dir) / "summary.csv")


def _clean(value):
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "item"):
        return _clean(value.item())
    return value


def _json(document, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(document), indent=2, sort_keys=True) + "\n")
    return path


def write_report(reports: list[PerformanceReport], out_dir: str | PathLike) -> Path:
    """Write ``report.json``: one object per strategy, keyed by name."""
    document = {report.strategy: report.to_dict() for report in reports}
    return _json(document, Path(out_dir) / "report.json")


def file_sha256(path: str | PathLike) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> dict[str, str | None]:
    """Installed versions of the packages a run depends on."""
    versions: dict[str, str | None] = {"python": platform.python_version()}
    for name in PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = None
    return versions


def build_manifest(cfg: RunConfig, artifacts: list[Path]) -> dict:
    """Hashes of the config, inputs and outputs plus package versions.

    ``created`` is the only field that changes between identical runs.
    """
    inputs = {
        key: file_sha256(value)
        for key, value in (("data", cfg.data.path), ("nber", cfg.data.nber), ("schema", cfg.data.schema))
        if value is not None
    }
    out_dir = Path(cfg.output.dir)
    return {
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "inputs_sha256": inputs,
        "artifacts_sha256": {
            str(p.relative_to(out_dir)): file_sha256(p) for p in sorted(artifacts)
        },
        "rng": RNG_NAME,
        "versions": package_versions(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def write_manifest(cfg: RunConfig, artifacts: list[Path]) -> Path:
    """Write ``manifest.json`` for the artifacts already on disk."""
    return _json(build_manifest(cfg, artifacts), Path(cfg.output.dir) / "manifest.json")


def _cell(value, fmt: str = "{:.2f}") -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return value if isinstance(value, str) else fmt.format(value)


def render_summary(frame: pd.DataFrame, console: Console | None = None) -> None:
    """Print the summary table to the terminal."""
    console = Console(stderr=True) if console is None else console
    table = Table(title="Out-of-sample performance (annualised %)")
    headers = ("Predictor", "dCER", "SR", "Rel. TO", "dCER net", "Exp", "Rec", "Up", "Down")
    for k, header in enumerate(headers):
        table.add_column(header, justify="left" if k == 0 else "right")
    for row in frame.itertuples(index=False):
        table.add_row(
            row.predictor,
            f"{_cell(row.dcer)}{row.stars}",
            _cell(row.sr),
            _cell(row.rel_turnover),
            _cell(row.dcer_net),
            _cell(row.dcer_exp),
            _cell(row.dcer_rec),
            _cell(row.dcer_up),
            _cell(row.dcer_down),
        )
    console.print(table)
