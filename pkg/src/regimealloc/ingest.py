"""Load monthly source data and derive the predictor panel.

The source is a Goyal-format CSV with one row per month and a ``yyyymm`` date
column. Column names drift between data vintages, so every raw field is looked
up through a schema map (canonical name -> source column name).
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from os import PathLike
from typing import Literal

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, FormatError, SchemaError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

PREDICTORS: tuple[str, ...] = (
    "dp",
    "dy",
    "ep",
    "de",
    "rvol",
    "bm",
    "ntis",
    "tbl",
    "lty",
    "ltr",
    "tms",
    "dfy",
    "dfr",
    "infl",
    "lep",
    "cbp",
)

SERIES: tuple[str, ...] = ("r_log", "r_simple", "slope", "rf", "market")

DEFAULT_SCHEMA: dict[str, str] = {
    "date": "yyyymm",
    "sp_index": "Index",
    "d12": "D12",
    "e12": "E12",
    "bm": "b/m",
    "tbl": "tbl",
    "lty": "lty",
    "ltr": "ltr",
    "aaa": "AAA",
    "baa": "BAA",
    "corpr": "corpr",
    "ntis": "ntis",
    "infl": "infl",
    "rvol": "rvol",
    "crsp_vw": "CRSP_SPvw",
    "rfree": "Rfree",
    "y10": "y10",
}

# Fields that enter a logarithm and must be strictly positive.
LOG_FIELDS: tuple[str, ...] = ("sp_index", "d12", "e12")

ExcessReturn = Literal["ratio", "difference"]


@dataclass(frozen=True)
class IngestConfig:
    """Switches for predictor derivation.

    Attributes:
        infl_lag: Lag inflation one month for its publication delay
        excess_return: ``ratio`` gives (1 + R)/(1 + Rf) - 1, ``difference``
            gives R - Rf

    """

    infl_lag: bool = True
    excess_return: ExcessReturn = "ratio"

    def __post_init__(self):
        """Reject unknown excess return forms."""
        if self.excess_return not in ("ratio", "difference"):
            raise ConfigError(
                f"excess_return must be 'ratio' or 'difference', got {self.excess_return!r}",
                module="ingest",
            )


def parse_yyyymm(value: str | int | pd.Period) -> pd.Period:
    """Parse a ``YYYYMM`` value into a monthly period.

    Args:
        value: Integer or string such as ``198001``, or a Period already

    Returns:
        The month as a ``pd.Period`` with monthly frequency

    Raises:
        FormatError: If the value is not a valid year-month

    """
    if isinstance(value, pd.Period):
        return value.asfreq("M")
    text = str(value).strip()
    if text.endswith(".0"):
        text = text[:-2]
    if len(text) != 6 or not text.isdigit() or not 1 <= int(text[4:]) <= 12:
        raise FormatError(f"unparseable yyyymm value {value!r}", module="ingest")
    return pd.Period(year=int(text[:4]), month=int(text[4:]), freq="M")


def to_yyyymm(dates: pd.PeriodIndex) -> np.ndarray:
    """Format monthly periods as integer ``YYYYMM`` codes."""
    return np.asarray(dates.year * 100 + dates.month, dtype=np.int64)


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PredictorPanel:
    """Date-aligned predictors, returns and rates.

    Row ``t`` holds values observable at the end of month ``t``; ``r_log``,
    ``r_simple``, ``rf`` and ``market`` are the returns realised over month
    ``t``.

    Attributes:
        dates: Monthly periods, strictly increasing without gaps
        X: ``T x N`` predictor matrix, columns named by ``names``
        names: Predictor names
        r_log: Log excess return
        r_simple: Simple excess return (the forecasting target)
        slope: Yield-curve slope, 10-year yield minus T-bill rate
        rf: Risk-free simple return
        market: Market simple total return

    """

    dates: pd.PeriodIndex
    X: np.ndarray
    names: tuple[str, ...]
    r_log: np.ndarray
    r_simple: np.ndarray
    slope: np.ndarray
    rf: np.ndarray
    market: np.ndarray
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        """Freeze arrays and check every series shares the date axis."""
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "dates", pd.PeriodIndex(self.dates, freq="M"))
        T = len(self.dates)
        if X.shape != (T, len(self.names)):
            raise DataError(
                f"predictor matrix has shape {X.shape}, expected {(T, len(self.names))}",
                module="ingest",
            )
        for name in SERIES:
            values = _readonly(getattr(self, name))
            if values.shape != (T,):
                raise DataError(
                    f"{name} has length {values.shape[0]}, expected {T}",
                    module="ingest",
                )
            object.__setattr__(self, name, values)

    @property
    def T(self) -> int:
        """Number of months."""
        return len(self.dates)

    @property
    def n_pred(self) -> int:
        """Number of predictors."""
        return len(self.names)

    @property
    def excess(self) -> np.ndarray:
        """Arithmetic market excess return ``market - rf``."""
        return self.market - self.rf

    def position(self, date: pd.Period | str | int) -> int:
        """Row index of a month.

        Raises:
            DataError: If the month is outside the panel

        """
        period = parse_yyyymm(date)
        offset = period.ordinal - self.dates[0].ordinal
        if not 0 <= offset < self.T:
            raise DataError(
                f"month outside panel {self.dates[0]}..{self.dates[-1]}",
                module="ingest",
                date=period,
            )
        return offset

    def slice(
        self,
        start: pd.Period | str | int | None = None,
        end: pd.Period | str | int | None = None,
    ) -> PredictorPanel:
        """Return the sub-panel covering ``start..end`` inclusive."""
        i = 0 if start is None else self.position(start)
        j = self.T - 1 if end is None else self.position(end)
        rows = slice(i, j + 1)
        return PredictorPanel(
            dates=self.dates[rows],
            X=self.X[rows],
            names=self.names,
            r_log=self.r_log[rows],
            r_simple=self.r_simple[rows],
            slope=self.slope[rows],
            rf=self.rf[rows],
            market=self.market[rows],
            source=self.source,
        )

    def truncate(self, end: pd.Period | str | int) -> PredictorPanel:
        """Drop every month after ``end``."""
        return self.slice(None, end)

    def with_predictors(self, X: np.ndarray, names=None) -> PredictorPanel:
        """Copy of the panel with the predictor matrix replaced."""
        return PredictorPanel(
            dates=self.dates,
            X=X,
            names=self.names if names is None else names,
            r_log=self.r_log,
            r_simple=self.r_simple,
            slope=self.slope,
            rf=self.rf,
            market=self.market,
            source=self.source,
        )

    def to_frame(self) -> pd.DataFrame:
        """Panel as a DataFrame with an integer ``yyyymm`` column."""
        frame = pd.DataFrame(self.X, columns=list(self.names))
        frame.insert(0, "yyyymm", to_yyyymm(self.dates))
        for name in SERIES:
            frame[name] = getattr(self, name)
        return frame


def load_schema(path: str | PathLike | None) -> dict[str, str]:
    """Read a column schema map from TOML.

    The file holds a ``[columns]`` table mapping canonical names to source
    column names. Missing entries fall back to ``DEFAULT_SCHEMA``.

    Args:
        path: Schema file, or None for the defaults

    Returns:
        Complete canonical -> source column map

    """
    schema = dict(DEFAULT_SCHEMA)
    if path is None:
        return schema
    with open(path, "rb") as f:
        document = tomllib.load(f)
    columns = document.get("columns", document)
    unknown = sorted(set(columns) - set(DEFAULT_SCHEMA))
    if unknown:
        raise SchemaError(
            f"unknown canonical column(s) in schema: {', '.join(unknown)}",
            module="ingest",
        )
    schema.update({key: str(value) for key, value in columns.items()})
    return schema


def is_panel_header(columns) -> bool:
    """Whether a CSV header describes an already-derived panel."""
    columns = set(columns)
    return "yyyymm" in columns and set(SERIES) <= columns


def parse_dates(values: pd.Series) -> pd.PeriodIndex:
    """Parse a ``yyyymm`` column and check it is strictly monthly.

    Raises:
        FormatError: For unparseable, non-increasing or gapped dates

    """
    periods = [parse_yyyymm(value) for value in values]
    dates = pd.PeriodIndex(periods, freq="M")
    ordinals = dates.asi8
    steps = np.diff(ordinals)
    if (steps <= 0).any():
        k = int(np.argmax(steps <= 0))
        raise FormatError(
            f"dates not strictly increasing: {dates[k]} followed by {dates[k + 1]}",
            module="ingest",
            date=dates[k + 1],
        )
    if (steps > 1).any():
        k = int(np.argmax(steps > 1))
        raise FormatError(
            f"date gap between {dates[k]} and {dates[k + 1]}",
            module="ingest",
            date=dates[k + 1],
        )
    return dates


def _numeric(column: pd.Series) -> pd.Series:
    return pd.to_numeric(column.str.replace(",", "", regex=False), errors="coerce")


def read_raw(
    path: str | PathLike,
    schema: dict[str, str] | None = None,
) -> pd.DataFrame:
    """Read a Goyal-format CSV into canonical columns.

    Cells are kept as text so that unparseable values can be told apart from
    genuinely missing ones by ``load_panel``.

    Raises:
        SchemaError: If a required column is absent

    """
    schema = DEFAULT_SCHEMA if schema is None else schema
    frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    frame.columns = [str(c).strip() for c in frame.columns]
    for canonical, source in schema.items():
        if source not in frame.columns:
            raise SchemaError(
                f"missing column {source!r} (schema field {canonical!r})",
                module="ingest",
            )
    raw = frame[list(schema.values())].copy()
    raw.columns = list(schema.keys())
    raw.index = parse_dates(raw.pop("date"))
    return raw


def derive_predictors(
    raw: pd.DataFrame,
    config: IngestConfig | None = None,
) -> PredictorPanel:
    """Compute the 16 predictors, excess returns and slope from raw rows.

    Lagged inputs (``dy``, ``infl``, ``lep``) use the previous row, so the
    first month of ``raw`` only serves as history. The panel is trimmed to the
    first month where every output column is present; a missing value after
    that is an error since nothing is imputed.

    Args:
        raw: Numeric frame of canonical raw columns indexed by monthly periods
        config: Derivation switches

    Returns:
        The derived PredictorPanel

    Raises:
        DataError: On a nonpositive value feeding a log, or a hole in the data

    """
    config = IngestConfig() if config is None else config
    for name in LOG_FIELDS:
        bad = raw[name].notna() & (raw[name] <= 0)
        if bad.any():
            date = raw.index[bad.to_numpy()][0]
            raise DataError(
                f"{name} = {raw.loc[date, name]} is nonpositive where a log is required",
                module="ingest",
                date=date,
            )

    log_sp = np.log(raw["sp_index"])
    log_d12 = np.log(raw["d12"])
    log_e12 = np.log(raw["e12"])
    r_log = np.log1p(raw["crsp_vw"]) - np.log1p(raw["rfree"])
    if config.excess_return == "ratio":
        r_simple = (1 + raw["crsp_vw"]) / (1 + raw["rfree"]) - 1
    else:
        r_simple = raw["crsp_vw"] - raw["rfree"]

    derived = pd.DataFrame(
        {
            "dp": log_d12 - log_sp,
            "dy": log_d12 - log_sp.shift(1),
            "ep": log_e12 - log_sp,
            "de": log_d12 - log_e12,
            "rvol": raw["rvol"],
            "bm": raw["bm"],
            "ntis": raw["ntis"],
            "tbl": raw["tbl"],
            "lty": raw["lty"],
            "ltr": raw["ltr"],
            "tms": raw["lty"] - raw["tbl"],
            "dfy": raw["baa"] - raw["aaa"],
            "dfr": raw["corpr"] - raw["ltr"],
            "infl": raw["infl"].shift(1) if config.infl_lag else raw["infl"],
            "lep": r_log.shift(1),
            "cbp": raw["corpr"] - raw["rfree"],
            "r_log": r_log,
            "r_simple": r_simple,
            "slope": raw["y10"] - raw["tbl"],
            "rf": raw["rfree"],
            "market": raw["crsp_vw"],
        },
        index=raw.index,
    )

    complete = derived.notna().all(axis=1).to_numpy()
    if not complete.any():
        raise DataError("no month has all predictors present", module="ingest")
    first = int(np.argmax(complete))
    if first:
        logger.info(
            "trimmed %d leading month(s); panel starts %s", first, derived.index[first]
        )
    derived = derived.iloc[first:]
    holes = derived.isna()
    if holes.any(axis=None):
        row = int(np.argmax(holes.any(axis=1).to_numpy()))
        column = holes.columns[holes.iloc[row].to_numpy()][0]
        raise DataError(
            f"missing {column} inside the sample (no imputation)",
            module="ingest",
            date=derived.index[row],
        )

    return PredictorPanel(
        dates=derived.index,
        X=derived[list(PREDICTORS)].to_numpy(),
        names=PREDICTORS,
        r_log=derived["r_log"].to_numpy(),
        r_simple=derived["r_simple"].to_numpy(),
        slope=derived["slope"].to_numpy(),
        rf=derived["rf"].to_numpy(),
        market=derived["market"].to_numpy(),
    )


def load_panel(
    path: str | PathLike,
    schema: dict[str, str] | None = None,
    start: pd.Period | str | int | None = None,
    end: pd.Period | str | int | None = None,
    config: IngestConfig | None = None,
) -> PredictorPanel:
    """Load, validate and derive a PredictorPanel from a CSV file.

    A file already in panel format (as written by ``write_panel_csv`` or the
    ``synth`` command) is read directly; otherwise it is treated as raw
    Goyal-format data and passed through ``derive_predictors``. The month
    before ``start`` is read as history for the lagged predictors.

    Args:
        path: CSV file
        schema: Canonical -> source column map (defaults to DEFAULT_SCHEMA)
        start: First month of the panel (default: first complete month)
        end: Last month of the panel (default: end of file)
        config: Derivation switches

    Returns:
        Validated PredictorPanel

    Raises:
        SchemaError: Missing column
        FormatError: Bad or non-monotone dates
        DataError: Unparseable cell inside the requested range

    """
    header = pd.read_csv(path, nrows=0).columns
    if is_panel_header([str(c).strip() for c in header]):
        panel = read_panel_csv(path)
        start_p = None if start is None else max(parse_yyyymm(start), panel.dates[0])
        end_p = None if end is None else min(parse_yyyymm(end), panel.dates[-1])
        return panel.slice(start_p, end_p)

    raw = read_raw(path, schema)
    lo = None if start is None else parse_yyyymm(start) - 1
    hi = None if end is None else parse_yyyymm(end)
    in_range = np.ones(len(raw), dtype=bool)
    if lo is not None:
        in_range &= raw.index >= lo
    if hi is not None:
        in_range &= raw.index <= hi
    raw = raw.loc[in_range]

    numeric = pd.DataFrame(index=raw.index)
    for name in raw.columns:
        text = raw[name]
        values = _numeric(text)
        bad = text.notna() & values.isna()
        if bad.any():
            date = raw.index[bad.to_numpy()][0]
            raise DataError(
                f"unparseable value {text[bad].iloc[0]!r} in column {name!r}",
                module="ingest",
                date=date,
            )
        numeric[name] = values

    panel = derive_predictors(numeric, config)
    if start is not None and panel.dates[0] > parse_yyyymm(start):
        logger.warning(
            "panel starts at %s, later than requested %s", panel.dates[0], start
        )
    logger.info(
        "loaded panel %s..%s (%d months) from %s",
        panel.dates[0],
        panel.dates[-1],
        panel.T,
        path,
    )
    return PredictorPanel(
        dates=panel.dates,
        X=panel.X,
        names=panel.names,
        r_log=panel.r_log,
        r_simple=panel.r_simple,
        slope=panel.slope,
        rf=panel.rf,
        market=panel.market,
        source=str(path),
    )


def write_panel_csv(panel: PredictorPanel, path: str | PathLike) -> None:
    """Write a panel so that ``read_panel_csv`` restores it bit for bit."""
    panel.to_frame().to_csv(path, index=False, float_format="%.17g")


def read_panel_csv(path: str | PathLike) -> PredictorPanel:
    """Read a panel written by ``write_panel_csv``.

    Every column other than ``yyyymm`` and the return/rate series is taken as
    a predictor, in file order.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in ("yyyymm", *SERIES) if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing column {missing[0]!r}", module="ingest")
    dates = parse_dates(frame["yyyymm"])
    names = tuple(c for c in frame.columns if c != "yyyymm" and c not in SERIES)
    values = frame[list(names) + list(SERIES)]
    if values.isna().any(axis=None):
        row = int(np.argmax(values.isna().any(axis=1).to_numpy()))
        raise DataError("missing value in panel file", module="ingest", date=dates[row])
    return PredictorPanel(
        dates=dates,
        X=frame[list(names)].to_numpy(dtype=np.float64),
        names=names,
        r_log=frame["r_log"].to_numpy(dtype=np.float64),
        r_simple=frame["r_simple"].to_numpy(dtype=np.float64),
        slope=frame["slope"].to_numpy(dtype=np.float64),
        rf=frame["rf"].to_numpy(dtype=np.float64),
        market=frame["market"].to_numpy(dtype=np.float64),
        source=str(path),
    )
