"""Exception hierarchy shared by every stage of the backtest.

Each error carries the module that raised it and, where one exists, the month
it concerns, so the CLI can report ``module``, ``date`` and ``cause`` and map
the failure onto an exit status.
"""

from __future__ import annotations

import pandas as pd


class BacktestError(Exception):
    """Base class for all errors raised by regimealloc."""

    exit_code = 1

    def __init__(
        self,
        message: str,
        *,
        module: str | None = None,
        date: pd.Period | str | int | None = None,
    ):
        """Store the message with its originating module and month.

        Args:
            message: Human readable cause
            module: Short name of the pipeline stage that failed
            date: Month the failure concerns, if any

        """
        super().__init__(message)
        self.message = message
        self.module = module
        self.date = date

    @property
    def yyyymm(self) -> str | None:
        """The failing month formatted as ``YYYYMM``, or None."""
        if self.date is None:
            return None
        if isinstance(self.date, pd.Period):
            return self.date.strftime("%Y%m")
        return str(self.date)

    def structured(self) -> str:
        """Render as ``module=<m> date=<d> cause=<text>``."""
        return (
            f"module={self.module or '-'} date={self.yyyymm or '-'} "
            f"cause={self.message}"
        )


class ConfigError(BacktestError, ValueError):
    """Invalid configuration value or CLI argument."""

    exit_code = 2


class DataError(BacktestError, ValueError):
    """Source data that cannot be used as given."""

    exit_code = 3


class SchemaError(DataError):
    """A required column is missing from the source file."""


class FormatError(DataError):
    """Dates are unparseable, duplicated, out of order or gapped."""


class WindowError(DataError):
    """Not enough history to estimate at the requested date."""


class NumericError(BacktestError, ArithmeticError):
    """A quantity is undefined for the inputs (zero variance, zero SSE...)."""

    exit_code = 4


class SingularityError(NumericError):
    """A regression or decomposition is degenerate."""
