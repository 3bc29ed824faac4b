"""Schema and coverage checks for a source CSV, without deriving anything.

Unlike ``load_panel``, which stops at the first problem, these checks collect
every problem in the file.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from os import PathLike
from typing import Literal

import numpy as np
import pandas as pd

from .errors import BacktestError
from .ingest import DEFAULT_SCHEMA, LOG_FIELDS, is_panel_header, parse_yyyymm

logger = logging.getLogger(__name__)

IssueKind = Literal[
    "missing_column",
    "bad_date",
    "date_order",
    "date_gap",
    "unparseable",
    "nonpositive",
]


@dataclass(frozen=True)
class Issue:
    """One problem found in the source file."""

    kind: IssueKind
    message: str
    date: str | None = None
    column: str | None = None

    def __str__(self) -> str:
        where = " ".join(x for x in (self.date, self.column) if x)
        return f"{self.kind}: {where + ': ' if where else ''}{self.message}"


def check_columns(columns, schema: dict[str, str]) -> list[Issue]:
    """Report schema fields whose source column is absent."""
    present = {str(c).strip() for c in columns}
    return [
        Issue("missing_column", f"missing column {source!r} (schema field {canonical!r})", column=source)
        for canonical, source in schema.items()
        if source not in present
    ]


def check_dates(values: pd.Series) -> list[Issue]:
    """Report unparseable, non-increasing and gapped ``yyyymm`` values.

    Gaps are reported with both adjacent months.
    """
    issues = []
    previous = None
    for value in values:
        try:
            period = parse_yyyymm(value)
        except BacktestError:
            issues.append(Issue("bad_date", f"unparseable date {value!r}"))
            continue
        if previous is not None:
            step = period.ordinal - previous.ordinal
            if step <= 0:
                issues.append(
                    Issue(
                        "date_order",
                        f"{period.strftime('%Y%m')} follows {previous.strftime('%Y%m')}",
                        date=period.strftime("%Y%m"),
                    )
                )
            elif step > 1:
                issues.append(
                    Issue(
                        "date_gap",
                        f"date gap between {previous.strftime('%Y%m')} and {period.strftime('%Y%m')}",
                        date=period.strftime("%Y%m"),
                    )
                )
        previous = period
    return issues


def check_cells(frame: pd.DataFrame, schema: dict[str, str]) -> list[Issue]:
    """Report unparseable numbers and nonpositive values that feed a log.

    Empty cells are not reported; leading gaps are normal in long histories.
    """
    issues = []
    dates = frame[schema["date"]].astype(str).str.strip().to_numpy()
    for canonical, source in schema.items():
        if canonical == "date" or source not in frame.columns:
            continue
        text = frame[source]
        values = pd.to_numeric(text.str.replace(",", "", regex=False), errors="coerce")
        for row in np.flatnonzero((text.notna() & values.isna()).to_numpy()):
            issues.append(
                Issue("unparseable", f"unparseable value {text.iloc[row]!r}", dates[row], source)
            )
        if canonical in LOG_FIELDS:
            for row in np.flatnonzero((values <= 0).to_numpy()):
                issues.append(
                    Issue(
                        "nonpositive",
                        f"{canonical} = {values.iloc[row]} where a log is required",
                        dates[row],
                        source,
                    )
                )
    return issues


def validate_file(
    path: str | PathLike,
    schema: dict[str, str] | None = None,
) -> list[Issue]:
    """Run every check on a source CSV.

    Args:
        path: CSV file
        schema: Canonical -> source column map (defaults to DEFAULT_SCHEMA)

    Returns:
        All issues found; empty for a clean file

    Raises:
        OSError: If the file cannot be read

    """
    schema = DEFAULT_SCHEMA if schema is None else schema
    frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    frame.columns = [str(c).strip() for c in frame.columns]
    if is_panel_header(frame.columns):
        schema = {"date": "yyyymm"} | {c: c for c in frame.columns if c != "yyyymm"}
    issues = check_columns(frame.columns, schema)
    if schema["date"] in frame.columns:
        issues += check_dates(frame[schema["date"]])
        issues += check_cells(frame, schema)
    logger.info("%s: %d issue(s)", path, len(issues))
    return issues
