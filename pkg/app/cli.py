"""Command-line entry point: ingest, forecast, run, report, validate.

Data goes to files or stdout, diagnostics to stderr. Exit code 0 on
success, 1 on any scheduler error, 2 on usage errors.
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from app import __version__
from forecasters.methods import method_from_settings
from forecasters.metrics import evaluate_store
from forecasters.store import ForecastStore, rolling_forecast_store
from models.errors import CarbonSchedError, ConfigError
from models.report import ForecastSettings
from services.carbon_data import (DEFAULT_CI_COL, DEFAULT_REPAIR_LIMIT, DEFAULT_TS_COL, align,
                                  default_data_root, ingest_carbon_csv, load_dataset, store_in_dataset)
from services.experiment import compare_reports, load_experiment_config, run_experiment, validate_config
from services.report_writer import comparison_frame, load_reports, write_experiment, write_report_tables

logger = logging.getLogger("carbon_sched")

FORECAST_METHODS = {
    "persistence": "persistence",
    "seasonal-naive": "seasonal_naive",
    "moving-average": "moving_average",
    "perfect": "perfect",
}


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--jobs", type=_positive_int, default=argparse.SUPPRESS,
                        help="parallel batch workers")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output file or directory")
    common.add_argument("--log-level", default=argparse.SUPPRESS,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="carbon-sched", parents=[common],
                                     description="Carbon-aware VM scheduler and multi-datacenter simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", parents=[common], help="normalize a carbon-intensity CSV into a dataset")
    ingest.add_argument("--region", required=True)
    ingest.add_argument("--csv", required=True, type=Path)
    ingest.add_argument("--ts-col", default=DEFAULT_TS_COL)
    ingest.add_argument("--ci-col", default=DEFAULT_CI_COL)
    ingest.add_argument("--repair-limit", type=int, default=DEFAULT_REPAIR_LIMIT)

    forecast = sub.add_parser("forecast", parents=[common], help="write a rolling forecast store")
    forecast.add_argument("--data", type=Path, help="dataset directory (default: $CARBON_SCHED_DATA)")
    forecast.add_argument("--method", choices=sorted(FORECAST_METHODS), default="seasonal-naive")
    forecast.add_argument("--period", type=_positive_int, default=24)
    forecast.add_argument("--window", type=_positive_int, default=24)
    forecast.add_argument("--horizon", type=_positive_int, default=96)
    forecast.add_argument("--context-length", type=_positive_int, default=1024)
    forecast.add_argument("--every", type=_positive_int, default=1)
    forecast.add_argument("--regions", nargs="+")

    run = sub.add_parser("run", parents=[common], help="run an experiment config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--forecasts", type=Path, help="import an external forecast store")
    run.add_argument("--count-idle", action="store_true", default=None,
                     help="charge idle power of every host")

    report = sub.add_parser("report", parents=[common], help="plot-ready tables from report files")
    report.add_argument("reports", nargs="*", type=Path)

    validate = sub.add_parser("validate", parents=[common], help="check a config and its datasets")
    validate.add_argument("--config", required=True, type=Path)
    return parser


def cmd_ingest(args) -> int:
    out_dir = getattr(args, "out", None) or default_data_root()
    series = ingest_carbon_csv(args.csv, args.region, ts_col=args.ts_col, ci_col=args.ci_col,
                               repair_limit=args.repair_limit)
    target = store_in_dataset(series, out_dir)
    logger.info("%s: %d hours from %s", series.region, len(series), series.start.isoformat())
    print(target)
    return 0


def cmd_forecast(args) -> int:
    data_dir = args.data or default_data_root()
    dataset = align(load_dataset(data_dir))
    regions = args.regions or sorted(dataset)
    missing = [r for r in regions if r not in dataset]
    if missing:
        raise ConfigError([f"region {r} not in dataset {data_dir}" for r in missing])

    settings = ForecastSettings(method=FORECAST_METHODS[args.method], period=args.period, window=args.window,
                                context_length=args.context_length, horizon=args.horizon, every=args.every)
    store = ForecastStore()
    for region in regions:
        method = method_from_settings(settings, actuals=dataset[region])
        rolling_forecast_store(dataset[region], method, every=settings.every,
                               context_length=settings.context_length, horizon=settings.horizon, store=store)
    out = Path(getattr(args, "out", None) or Path(data_dir) / "forecasts.csv")
    print(store.to_csv(out))

    metrics, vs_actual = evaluate_store(store, dataset)
    for frame, suffix in ((metrics, "metrics"), (vs_actual, "vs_actual")):
        path = out.with_name(f"{out.stem}_{suffix}.csv")
        frame.to_csv(path, index=False, lineterminator="\n")
        print(path)
    for row in metrics.itertuples():
        logger.info("%s: MAE %.2f, RMSE %.2f over %d forecasts", row.region, row.mae, row.rmse, row.forecasts)
    return 0


def cmd_run(args) -> int:
    config = load_experiment_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if args.forecasts is not None:
        overrides["forecasts"] = args.forecasts.resolve()
    if args.count_idle:
        overrides["count_idle"] = True
    if overrides:
        config = config.model_copy(update=overrides)

    result = run_experiment(config, base_dir=args.config.resolve().parent, jobs=getattr(args, "jobs", 1))
    out_dir = getattr(args, "out", None) or Path("out") / config.name
    write_experiment(result, config, out_dir, __version__)
    comparison_frame(result.comparison).to_csv(sys.stdout, index=False, lineterminator="\n")
    return 0


def cmd_report(args, parser: argparse.ArgumentParser) -> int:
    if not args.reports:
        parser.error("report needs at least one report file")
    reports = []
    for path in args.reports:
        reports.extend(load_reports(path))
    rows = compare_reports(reports)
    out_dir = getattr(args, "out", None) or Path("out") / "report"
    write_report_tables(reports, rows, out_dir)
    comparison_frame(rows).to_csv(sys.stdout, index=False, lineterminator="\n")
    return 0


def cmd_validate(args) -> int:
    config = load_experiment_config(args.config)
    problems = validate_config(config, args.config.resolve().parent)
    for problem in problems:
        print(f"error: {problem}", file=sys.stderr)
    if problems:
        return 1
    print(f"{args.config}: ok")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    level = getattr(args, "log_level", None) or os.getenv("CARBON_SCHED_LOG_LEVEL", "INFO")
    logging.basicConfig(level=level.upper(), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "forecast":
            return cmd_forecast(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "report":
            return cmd_report(args, parser)
        return cmd_validate(args)
    except ConfigError as e:
        for problem in e.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    except CarbonSchedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
