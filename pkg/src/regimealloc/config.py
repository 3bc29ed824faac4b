"""Run configuration read from TOML, with defaults reproducing the study design.

A run file has the tables ``[data]``, ``[sample]``, ``[strategies]``,
``[allocation]``, ``[forecast]``, ``[ingest]``, ``[bootstrap]``,
``[evaluation]`` and ``[output]``. Every key is optional. Relative paths in
``[data]`` are resolved against the directory of the run file.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from os import PathLike
from pathlib import Path

import pandas as pd

from .allocation import AllocationConfig
from .errors import BacktestError, ConfigError
from .evaluation import BootstrapConfig
from .forecast import MODELS, ForecastConfig
from .index import METHODS
from .ingest import IngestConfig, parse_yyyymm

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _month(value, key: str) -> pd.Period:
    try:
        return parse_yyyymm(value)
    except BacktestError as e:
        raise ConfigError(f"{key}: {e.message}", module="config")


@dataclass(frozen=True)
class DataConfig:
    """Input files."""

    path: str | None = None
    nber: str | None = None
    schema: str | None = None


@dataclass(frozen=True)
class SampleConfig:
    """Estimation and evaluation windows.

    Attributes:
        train_start: First month of every estimation window
        oos_start: First forecast target month
        oos_end: Last forecast target month

    """

    train_start: pd.Period = field(default_factory=lambda: pd.Period("1960-01", "M"))
    oos_start: pd.Period = field(default_factory=lambda: pd.Period("1980-01", "M"))
    oos_end: pd.Period = field(default_factory=lambda: pd.Period("2020-09", "M"))

    def __post_init__(self):
        """Parse months and check their order."""
        for name in ("train_start", "oos_start", "oos_end"):
            object.__setattr__(self, name, _month(getattr(self, name), name))
        if not self.oos_start < self.oos_end:
            raise ConfigError("oos_start must precede oos_end", module="config")
        if not self.train_start < self.oos_start:
            raise ConfigError("train_start must precede oos_start", module="config")


@dataclass(frozen=True)
class StrategyConfig:
    """Which strategies to run.

    The historical-mean forecast is always computed as the benchmark;
    ``histmean`` only controls whether it is reported as a strategy row.
    """

    methods: tuple[str, ...] = METHODS
    models: tuple[str, ...] = MODELS
    histmean: bool = True
    buy_and_hold: bool = True

    def __post_init__(self):
        """Check method and model names."""
        for name in ("methods", "models"):
            value = getattr(self, name)
            object.__setattr__(self, name, (value,) if isinstance(value, str) else tuple(value))
        unknown = [m for m in self.methods if m not in METHODS]
        unknown += [m for m in self.models if m not in MODELS]
        if unknown:
            raise ConfigError(f"unknown strategy component {unknown[0]!r}", module="config")
        if not (self.methods and self.models) and not (self.histmean or self.buy_and_hold):
            raise ConfigError("no strategy enabled", module="config")

    @property
    def pairs(self) -> list[tuple[str, str]]:
        """(method, model) combinations in a fixed order."""
        return [(method, model) for method in self.methods for model in self.models]


@dataclass(frozen=True)
class EvaluationConfig:
    """CER settings; ``cer_ddof=0`` uses the population variance."""

    cer_ddof: int = 0

    def __post_init__(self):
        """Allow only 0 or 1."""
        if self.cer_ddof not in (0, 1):
            raise ConfigError("cer_ddof must be 0 or 1", module="config")


@dataclass(frozen=True)
class OutputConfig:
    """Output directory and worker count."""

    dir: str = "results"
    jobs: int = 1

    def __post_init__(self):
        """Require at least one worker."""
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1", module="config")


@dataclass(frozen=True)
class RunConfig:
    """Everything a backtest needs."""

    data: DataConfig = field(default_factory=DataConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    strategies: StrategyConfig = field(default_factory=StrategyConfig)
    allocation: AllocationConfig = field(default_factory=AllocationConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        """Give the forecaster the sample's training start."""
        if self.forecast.train_start != self.sample.train_start:
            object.__setattr__(
                self, "forecast", replace(self.forecast, train_start=self.sample.train_start)
            )

    def to_dict(self) -> dict:
        """Canonical plain-data form, months written as ``YYYYMM``."""

        def plain(value):
            if isinstance(value, pd.Period):
                return value.strftime("%Y%m")
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [plain(v) for v in value]
            return value

        return plain(asdict(self))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


SECTIONS = {f.name: f.default_factory for f in fields(RunConfig)}


def _build(section: str, values: dict):
    factory = SECTIONS[section]
    known = {f.name for f in fields(factory)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key [{section}] {unknown[0]}", module="config")
    if section == "forecast" and "train_start" in values:
        raise ConfigError("set train_start under [sample]", module="config")
    try:
        return factory(**values)
    except BacktestError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"[{section}] {e.message}", module="config")


def load_config(
    path: str | PathLike | None = None,
    overrides: dict[str, dict] | None = None,
) -> RunConfig:
    """Build a RunConfig from a TOML file and per-section overrides.

    Args:
        path: Run file, or None for the defaults
        overrides: ``{section: {key: value}}`` applied on top of the file,
            e.g. from command-line flags

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: Unreadable file, unknown section or key, invalid value

    """
    document: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                document = tomllib.load(f)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}", module="config")
        base = Path(path).parent
        data = document.get("data", {})
        for key in ("path", "nber", "schema"):
            if data.get(key) is not None:
                data[key] = str(base / data[key])

    unknown = sorted(set(document) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]", module="config")
    for section, values in (overrides or {}).items():
        document.setdefault(section, {}).update(
            {k: v for k, v in values.items() if v is not None}
        )
    parts = {name: _build(name, document.get(name, {})) for name in SECTIONS}
    return RunConfig(**parts)
