"""Market-state labels: ex-ante Up/Down from the yield curve, ex-post NBER."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from os import PathLike
from typing import Literal

import numpy as np
import pandas as pd

from .errors import DataError
from .ingest import parse_dates

logger = logging.getLogger(__name__)

UpDown = Literal["Up", "Down"]
Cycle = Literal["Expansion", "Recession"]

UP: UpDown = "Up"
DOWN: UpDown = "Down"
EXPANSION: Cycle = "Expansion"
RECESSION: Cycle = "Recession"


@dataclass(frozen=True, eq=False)
class StateSeries:
    """Per-month state labels.

    ``updown`` is the only label used for forecasting and allocation; ``nber``
    exists purely to split evaluation samples.

    Attributes:
        dates: Monthly periods
        updown: ``"Up"``/``"Down"`` per month
        nber: ``"Expansion"``/``"Recession"`` per month, or None

    """

    dates: pd.PeriodIndex
    updown: np.ndarray
    nber: np.ndarray | None = None

    def __post_init__(self):
        """Freeze the label arrays."""
        object.__setattr__(self, "dates", pd.PeriodIndex(self.dates, freq="M"))
        for name in ("updown", "nber"):
            labels = getattr(self, name)
            if labels is None:
                continue
            labels = np.array(labels, dtype=object)
            if labels.shape != (len(self.dates),):
                raise DataError(
                    f"{name} has {labels.shape[0]} labels for {len(self.dates)} months",
                    module="states",
                )
            labels.setflags(write=False)
            object.__setattr__(self, name, labels)

    @property
    def is_down(self) -> np.ndarray:
        """Boolean mask of Down months."""
        return self.updown == DOWN

    @property
    def is_recession(self) -> np.ndarray:
        """Boolean mask of NBER recession months.

        Raises:
            DataError: If no NBER labels are attached

        """
        if self.nber is None:
            raise DataError("no NBER labels attached", module="states")
        return self.nber == RECESSION

    def slice(self, start: pd.Period, end: pd.Period) -> StateSeries:
        """Return the labels for ``start..end`` inclusive."""
        mask = (self.dates >= start) & (self.dates <= end)
        return StateSeries(
            dates=self.dates[mask],
            updown=self.updown[mask],
            nber=None if self.nber is None else self.nber[mask],
        )

    def align(self, dates: pd.PeriodIndex) -> StateSeries:
        """Return the labels for exactly ``dates``.

        Raises:
            DataError: If any of ``dates`` is not covered

        """
        positions = self.dates.get_indexer(dates)
        if (positions < 0).any():
            missing = dates[positions < 0][0]
            raise DataError("no state label for month", module="states", date=missing)
        return StateSeries(
            dates=dates,
            updown=self.updown[positions],
            nber=None if self.nber is None else self.nber[positions],
        )


def classify_updown(slope, dates: pd.PeriodIndex | None = None) -> StateSeries:
    """Label each month Up (slope >= 0) or Down (slope < 0).

    Args:
        slope: Yield-curve slope per month
        dates: Months matching ``slope``; a running index is used if omitted

    Returns:
        StateSeries without NBER labels

    Raises:
        DataError: If a slope value is not finite

    """
    slope = np.asarray(slope, dtype=np.float64)
    if dates is None:
        dates = pd.period_range("1900-01", periods=len(slope), freq="M")
    bad = ~np.isfinite(slope)
    if bad.any():
        raise DataError(
            "non-finite yield-curve slope", module="states", date=dates[int(np.argmax(bad))]
        )
    updown = np.where(slope < 0, DOWN, UP).astype(object)
    return StateSeries(dates=dates, updown=updown)


def load_nber(path: str | PathLike) -> pd.Series:
    """Read ``yyyymm,usrec`` recession labels.

    Returns:
        0/1 integer Series indexed by monthly periods

    """
    frame = pd.read_csv(path)
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    if "yyyymm" not in frame.columns or "usrec" not in frame.columns:
        raise DataError("NBER file needs columns yyyymm,usrec", module="states")
    dates = parse_dates(frame["yyyymm"])
    values = pd.to_numeric(frame["usrec"], errors="coerce")
    if values.isna().any() or not values.isin([0, 1]).all():
        row = int(np.argmax((values.isna() | ~values.isin([0, 1])).to_numpy()))
        raise DataError("usrec must be 0 or 1", module="states", date=dates[row])
    return pd.Series(values.astype(int).to_numpy(), index=dates, name="usrec")


def attach_nber(states: StateSeries, labels) -> StateSeries:
    """Attach Expansion/Recession labels to a StateSeries.

    Args:
        states: Up/Down labels
        labels: 0/1 Series indexed by monthly periods, or a plain vector
            aligned with ``states.dates``

    Returns:
        A new StateSeries with ``nber`` populated (1 -> Recession)

    Raises:
        DataError: If any state month has no label

    """
    if isinstance(labels, pd.Series):
        index = pd.PeriodIndex(labels.index, freq="M")
        positions = index.get_indexer(states.dates)
        if (positions < 0).any():
            missing = states.dates[positions < 0][0]
            raise DataError("missing NBER label", module="states", date=missing)
        values = labels.to_numpy()[positions]
    else:
        values = np.asarray(labels)
        if values.shape[0] != len(states.dates):
            raise DataError(
                f"{values.shape[0]} NBER labels for {len(states.dates)} months",
                module="states",
            )
    nber = np.where(values.astype(int) == 1, RECESSION, EXPANSION).astype(object)
    logger.debug("attached NBER labels: %d recession months", int((values == 1).sum()))
    return StateSeries(dates=states.dates, updown=states.updown, nber=nber)
