"""Command-line entry point: ``elss <subcommand> [flags]``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .config import ExperimentConfig, load_config, parse_lambda
from .errors import (ArgumentError, ConfigError, ConvergenceError, DegenerateError,
                     InsufficientSamplesError, LabelError, ParseError, ShapeError,
                     TaskMismatchError)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
SUBCOMMANDS = ("bench", "lambda-sweep", "weights-hist", "fewshot", "diagnose")

_DATA_ERRORS = (ParseError, LabelError, ShapeError, TaskMismatchError,
                InsufficientSamplesError, OSError)
_NUMERIC_ERRORS = (DegenerateError, ConvergenceError, np.linalg.LinAlgError, ArithmeticError)


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _lambda_token(text):
    return text if text.replace(" ", "") in ("1/N", "1/N0") else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elss", description=(
        "Random-feature benchmarks with empirical leverage score sampling."))
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML experiment config")
        p.add_argument("--dataset", help="CSV or libsvm training file, or 'synthetic'")
        p.add_argument("--test-dataset", help="separate test file (default: random split)")
        p.add_argument("--task", choices=("regression", "classification"))
        p.add_argument("--method", type=_csv_list(str), help="comma-separated methods")
        p.add_argument("--m", type=_csv_list(int), help="comma-separated feature counts")
        p.add_argument("--lambda", dest="lam", type=_lambda_token, help="number or 1/N")
        p.add_argument("--lambda-grid", type=_csv_list(_lambda_token))
        p.add_argument("--m0", type=int, help="pool size (weights-hist)")
        p.add_argument("--k-grid", type=_csv_list(int), help="labels per class (fewshot)")
        p.add_argument("--bandwidth", help="'median', a number, or a comma-separated grid")
        p.add_argument("--repeats", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--timing", action="store_true", help="record wall_time_ms")
        p.add_argument("--out", type=Path, help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def config_from_args(args) -> ExperimentConfig:
    """Config file first, then flag overrides (flags win)."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.dataset:
        if args.dataset == "synthetic":
            cfg.dataset.kind = "synthetic"
        else:
            cfg.dataset.kind = "csv" if args.dataset.lower().endswith(".csv") else "libsvm"
            cfg.dataset.path = args.dataset
    if args.test_dataset:
        cfg.dataset.test_path = args.test_dataset
    if args.task:
        cfg.dataset.task = args.task
    if args.method:
        cfg.methods = args.method
    if args.m:
        cfg.m_grid = args.m
    if args.lam is not None:
        cfg.lam = args.lam
    if args.lambda_grid:
        cfg.lambda_grid = args.lambda_grid
    if args.m0 is not None:
        cfg.m0 = args.m0
    if args.k_grid:
        cfg.fewshot_k_grid = args.k_grid
    if args.bandwidth:
        if args.bandwidth == "median":
            cfg.bandwidth = "median"
        else:
            try:
                bws = [float(t) for t in args.bandwidth.split(",")]
            except ValueError:
                raise ConfigError(f"invalid bandwidth {args.bandwidth!r}") from None
            cfg.bandwidth = bws if len(bws) > 1 else bws[0]
    if args.repeats is not None:
        cfg.repeats = args.repeats
    if args.seed is not None:
        cfg.seed = args.seed
    if args.timing:
        cfg.record_timing = True
    return cfg.validate()


def run(args) -> str:
    cfg = config_from_args(args)
    if args.command == "diagnose":
        return json.dumps(bench.run_diagnose(cfg), indent=1, sort_keys=True) + "\n"
    if args.command == "weights-hist":
        rows = bench.run_weights_hist(cfg)
        if args.format == "json":
            return json.dumps([{"lambda": lam, "feature_index": i, "weight": q}
                               for lam, i, q in rows], indent=1) + "\n"
        return bench.format_weights_csv(rows)
    runner = {"bench": bench.run_bench, "lambda-sweep": bench.run_lambda_sweep,
              "fewshot": bench.run_fewshot}[args.command]
    records = runner(cfg)
    if args.format == "json":
        return json.dumps({"schema": f"elss-results/{bench.SCHEMA_VERSION}",
                           "rows": bench.records_to_dicts(records)}, indent=1) + "\n"
    return bench.format_csv(records)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = run(args)
    except (ConfigError, ArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
