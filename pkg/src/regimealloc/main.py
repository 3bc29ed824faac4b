"""Backtest pipeline and CLI entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from .allocation import (
    AllocationPath,
    constraint_violations,
    run_allocation,
    run_buy_and_hold,
    variance_path,
)
from .config import RunConfig, load_config
from .errors import BacktestError, ConfigError, NumericError
from .evaluation import PerformanceReport, evaluate, summary_frame
from .export import (
    render_summary,
    write_forecast,
    write_loadings,
    write_manifest,
    write_path,
    write_report,
    write_summary,
)
from .forecast import ForecastSeries, run_oos
from .ingest import PredictorPanel, load_panel, load_schema
from .states import StateSeries, attach_nber, classify_updown, load_nber
from .synth import load_synth_spec, write_synth
from .validate import validate_file

logger = logging.getLogger(__name__)

BENCHMARK = "histmean"


@dataclass
class BacktestResult:
    """Everything a backtest produced, in reporting order."""

    forecasts: list[ForecastSeries] = field(default_factory=list)
    paths: list[AllocationPath] = field(default_factory=list)
    reports: list[PerformanceReport] = field(default_factory=list)
    summary: pd.DataFrame | None = None


def _states(panel: PredictorPanel, cfg: RunConfig) -> StateSeries:
    states = classify_updown(panel.slope, panel.dates)
    if cfg.data.nber is None:
        logger.warning("no NBER file given; expansion/recession columns left empty")
        return states
    window = states.slice(cfg.sample.oos_start - 1, cfg.sample.oos_end)
    return attach_nber(window, load_nber(cfg.data.nber))


def backtest(cfg: RunConfig, panel: PredictorPanel | None = None) -> BacktestResult:
    """Run every configured strategy and evaluate it against the historical mean.

    Strategies are independent given the panel, so they run on
    ``cfg.output.jobs`` threads; results are always collected in the
    configured order.

    Args:
        cfg: Run configuration
        panel: Pre-loaded panel (loaded from ``cfg.data.path`` when None)

    Returns:
        Forecasts, paths, reports and the summary table

    Raises:
        NumericError: If an allocation breaks its constraints

    """
    if panel is None:
        if cfg.data.path is None:
            raise ConfigError("no data file given", module="config")
        schema = load_schema(cfg.data.schema)
        panel = load_panel(cfg.data.path, schema, end=cfg.sample.oos_end, config=cfg.ingest)
    start, end = cfg.sample.oos_start, cfg.sample.oos_end
    states = classify_updown(panel.slope, panel.dates)
    eval_states = _states(panel, cfg)
    jobs = cfg.output.jobs

    specs = [("none", BENCHMARK), *cfg.strategies.pairs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        forecasts = list(
            pool.map(
                lambda s: run_oos(panel, states, s[0], s[1], start, end, cfg.forecast),
                specs,
            )
        )

    sigma2hat = variance_path(panel, forecasts[0].dates, cfg.allocation.var_window)
    paths = [run_allocation(f, panel, cfg.allocation, sigma2hat) for f in forecasts]
    if cfg.strategies.buy_and_hold:
        paths.append(run_buy_and_hold(panel, start, end, cfg.allocation))
    for path in paths:
        problems = constraint_violations(path, cfg.allocation)
        if problems:
            raise NumericError(f"{path.name}: {problems[0]}", module="allocation")

    bench, bench_forecast = paths[0], forecasts[0]
    by_name = {f.name: f for f in forecasts}

    def one(path: AllocationPath) -> PerformanceReport:
        return evaluate(
            path,
            bench,
            eval_states,
            cfg.allocation.gamma,
            cfg.bootstrap,
            forecast=by_name.get(path.name),
            bench_forecast=bench_forecast,
            ddof=cfg.evaluation.cer_ddof,
        )

    if not cfg.strategies.histmean:
        forecasts, paths = forecasts[1:], paths[1:]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        reports = list(pool.map(one, paths))
    return BacktestResult(
        forecasts=forecasts,
        paths=paths,
        reports=reports,
        summary=summary_frame(reports, BENCHMARK),
    )


def write_artifacts(result: BacktestResult, cfg: RunConfig) -> list[Path]:
    """Write every result file, then the manifest that hashes them."""
    out = Path(cfg.output.dir)
    artifacts = [write_path(path, out) for path in result.paths]
    for f in result.forecasts:
        artifacts.append(write_forecast(f, out))
        loadings = write_loadings(f, out)
        if loadings is not None:
            artifacts.append(loadings)
    artifacts.append(write_summary(result.summary, out))
    artifacts.append(write_report(result.reports, out))
    artifacts.append(write_manifest(cfg, artifacts))
    return artifacts


def cmd_backtest(args: argparse.Namespace) -> int:
    """Run the ``backtest`` subcommand."""
    overrides = {
        "data": {"path": args.data, "nber": args.nber, "schema": args.schema},
        "sample": {"oos_start": args.oos_start, "oos_end": args.oos_end},
        "allocation": {"gamma": args.gamma, "cost_bps": args.cost_bps},
        "bootstrap": {"reps": args.bootstrap, "seed": args.seed},
        "output": {"dir": args.out, "jobs": args.jobs},
    }
    cfg = load_config(args.config, overrides)
    result = backtest(cfg)
    artifacts = write_artifacts(result, cfg)
    render_summary(result.summary)
    print(f"wrote {len(artifacts)} files to {cfg.output.dir}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    """Run the ``validate`` subcommand; exit 0 only for a clean file."""
    issues = validate_file(args.data, load_schema(args.schema))
    for issue in issues:
        print(issue)
    return 0 if not issues else 3


def cmd_synth(args: argparse.Namespace) -> int:
    """Run the ``synth`` subcommand."""
    panel_path, truth_path = write_synth(load_synth_spec(args.spec), args.out)
    print(f"wrote {panel_path} and {truth_path}")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimealloc",
        description="Backtest index-based equity premium forecasts with state switching",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    bt = commands.add_parser("backtest", help="Run the out-of-sample backtest")
    bt.add_argument("--config", "-c", help="Run configuration TOML")
    bt.add_argument("--data", "-d", help="Source CSV (overrides [data] path)")
    bt.add_argument("--nber", help="NBER recession CSV with yyyymm,usrec")
    bt.add_argument("--schema", help="Column schema TOML")
    bt.add_argument("--oos-start", help="First forecast month, YYYYMM")
    bt.add_argument("--oos-end", help="Last forecast month, YYYYMM")
    bt.add_argument("--gamma", type=float, help="Relative risk aversion")
    bt.add_argument("--cost-bps", type=float, help="Trading cost in basis points")
    bt.add_argument("--bootstrap", type=int, help="Bootstrap replications")
    bt.add_argument("--seed", type=int, help="Bootstrap seed")
    bt.add_argument("--out", "-o", help="Output directory")
    bt.add_argument("--jobs", "-j", type=int, help="Worker threads")
    bt.set_defaults(handler=cmd_backtest)

    val = commands.add_parser("validate", help="Check a source CSV for problems")
    val.add_argument("--data", "-d", required=True, help="Source CSV")
    val.add_argument("--schema", help="Column schema TOML")
    val.set_defaults(handler=cmd_validate)

    syn = commands.add_parser("synth", help="Write a synthetic panel CSV")
    syn.add_argument("--spec", required=True, help="Synthetic process TOML")
    syn.add_argument("--out", "-o", required=True, help="Panel CSV to write")
    syn.set_defaults(handler=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> None:
    """Command line interface for the package."""
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        status = args.handler(args)
    except BacktestError as e:
        print(f"error: {e.structured()}", file=sys.stderr)
        sys.exit(e.exit_code)
    except OSError as e:
        print(f"error: module=io date=- cause={e}", file=sys.stderr)
        sys.exit(3)
    except Exception as e:
        logger.debug("unexpected failure", exc_info=True)
        print(f"error: module=- date=- cause={e}", file=sys.stderr)
        sys.exit(1)
    sys.exit(status)


if __name__ == "__main__":
    main()
