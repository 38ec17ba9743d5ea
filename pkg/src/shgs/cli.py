"""Command-line entry point: ``shgs run|recommend|plot|timing``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, RunConfig, parse_config, parse_override
from .data import DataError, encode_one_hot, load_dataset, make_split_plan
from .engine import TARGETS, SweepReport, recommend_range, run_shgs
from .reporting import (
    read_results_csv,
    render_scatter,
    timing_summary,
    write_metadata,
    write_results_csv,
    write_timing_csv,
)

log = logging.getLogger("shgs")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def run_config(cfg: RunConfig) -> SweepReport:
    """Load, split, sweep and write results + plots into ``cfg.output``."""
    raw = load_dataset(cfg.dataset, cfg.target_column)
    data = encode_one_hot(raw, cfg.positive_label)
    plan = make_split_plan(data.labels, cfg.test_fraction, cfg.folds, cfg.seed)
    log.info(
        "%s: %d rows, %d one-hot columns, %d train / %d test",
        raw.name, data.n_rows, data.n_features, plan.train_indices.size, plan.test_indices.size,
    )
    report = run_shgs(
        data, plan, cfg.space(), cfg.target, cfg.iterations, cfg.seed, n_jobs=cfg.n_jobs,
    )
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    results = out / f"results_{cfg.target}.csv"
    write_results_csv(report, results)
    write_metadata(report, results)
    render_scatter(report, "test_auc", out / "plots")
    render_scatter(report, "runtime", out / "plots")
    log.info("%d trials in %.1f s -> %s", len(report.records), report.total_runtime, results)
    return report


def _space_flags(items: Optional[List[str]]):
    overrides = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--space expects NAME=SPEC, got {item!r}")
        name, spec = item.split("=", 1)
        overrides[name.strip()] = parse_override(name.strip(), spec)
    return overrides


def _cmd_run(args) -> int:
    cfg = parse_config(
        args.config,
        dataset=args.dataset,
        target=args.target,
        target_column=args.target_column,
        positive_label=args.positive_label,
        iterations=args.iterations,
        seed=args.seed,
        test_fraction=args.test_fraction,
        folds=args.folds,
        output=args.output,
        n_jobs=args.n_jobs,
        space_overrides=_space_flags(args.space),
    )
    run_config(cfg)
    return EXIT_OK


def _cmd_recommend(args) -> int:
    if args.target == "batch_size" and args.n_train is None:
        raise UsageError("--n-train is required for batch_size")
    report = read_results_csv(args.results) if args.results else None
    rec = recommend_range(args.target, args.n_train, report)
    print(f"{rec.target}: [{rec.lo:g}, {rec.hi:g}]")
    if rec.empirical is not None:
        print(f"{rec.target} (from sweep): [{rec.empirical[0]:g}, {rec.empirical[1]:g}]")
    return EXIT_OK


def _cmd_plot(args) -> int:
    report = read_results_csv(args.results)
    for path in render_scatter(report, args.y, args.output):
        print(path)
    return EXIT_OK


def _cmd_timing(args) -> int:
    reports = [read_results_csv(p) for p in args.results]
    summary = timing_summary(reports)
    write_timing_csv(summary, args.output)
    print(args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shgs", description="Single-hyperparameter grid search")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="sweep one target hyperparameter")
    run.add_argument("--config", help="INI file with [run] and [space] sections")
    run.add_argument("--dataset")
    run.add_argument("--target")
    run.add_argument("--target-column")
    run.add_argument("--positive-label")
    run.add_argument("--iterations", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--test-fraction", type=float)
    run.add_argument("--folds", type=int)
    run.add_argument("--output")
    run.add_argument("--n-jobs", type=int)
    run.add_argument("--space", action="append", metavar="NAME=SPEC",
                     help="pool override, e.g. learning_rate=0.001,0.05,0.001")
    run.set_defaults(func=_cmd_run)

    rec = sub.add_parser("recommend", help="reduced range for a follow-up grid search")
    rec.add_argument("--target", required=True, choices=TARGETS)
    rec.add_argument("--n-train", type=int)
    rec.add_argument("--results", help="results CSV of a sweep over the same target")
    rec.set_defaults(func=_cmd_recommend)

    plot = sub.add_parser("plot", help="re-render scatter plots from a results CSV")
    plot.add_argument("--results", required=True)
    plot.add_argument("--y", choices=("test_auc", "runtime"), default="test_auc")
    plot.add_argument("--output", default=".")
    plot.set_defaults(func=_cmd_plot)

    timing = sub.add_parser("timing", help="running-time tables from results CSVs")
    timing.add_argument("results", nargs="+")
    timing.add_argument("--output", default="timing.csv")
    timing.set_defaults(func=_cmd_timing)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"shgs: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"shgs: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"shgs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"shgs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"shgs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
