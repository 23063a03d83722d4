"""Command-line entry point: run sweeps, summarize results, list mechanisms.

Exit codes: 0 success, 2 configuration error, 3 data error.
Environment overrides: LDPFREQ_OUTPUT_DIR replaces the configured output
directory, LDPFREQ_WORKERS sets the worker-pool size.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from typing import Optional, Sequence

from . import bench
from .core import ALL_MECHANISMS, LONGITUDINAL_MECHANISMS
from .errors import ConfigError, LdpError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpfreq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the experiment sweep described by a TOML config")
    run.add_argument("--config", required=True, help="path to the TOML experiment config")
    run.add_argument("--workers", type=int, default=None, help="worker processes (default 1)")

    summ = sub.add_parser("summarize", help="build gain tables from a results directory")
    summ.add_argument("--input", required=True, help="results directory (containing results.csv)")
    summ.add_argument("--metric", choices=("mse", "mae", "both"), default="both")

    sub.add_parser("list-mechanisms", help="print the supported mechanism ids")
    return parser


def _workers_from_env(explicit: Optional[int]) -> Optional[int]:
    if explicit is not None:
        return explicit
    env = os.environ.get("LDPFREQ_WORKERS")
    if env is None:
        return None
    try:
        workers = int(env)
        if workers < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"LDPFREQ_WORKERS must be a positive integer, got {env!r}") from None
    return workers


def cmd_run(args) -> int:
    cfg = bench.load_config(args.config)
    out_override = os.environ.get("LDPFREQ_OUTPUT_DIR")
    if out_override:
        cfg = dataclasses.replace(cfg, output_dir=out_override)
    workers = _workers_from_env(args.workers)
    results = bench.run_experiment(cfg, workers=workers)
    print(f"wrote {len(results)} result rows to {os.path.join(cfg.output_dir, 'results.csv')}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    path = os.path.join(args.input, "results.csv")
    if not os.path.exists(path):
        print(f"error: no results file at {path}", file=sys.stderr)
        return EXIT_DATA
    results = bench.load_results(path)
    if not results:
        print("error: results file contains no rows", file=sys.stderr)
        return EXIT_DATA
    tables = bench.summarize(results)
    out_dir = os.environ.get("LDPFREQ_OUTPUT_DIR") or args.input
    metrics = ("mse", "mae") if args.metric == "both" else (args.metric,)
    selected = {
        family: {m: t for m, t in by_metric.items() if m in metrics}
        for family, by_metric in tables.items()
    }
    bench.write_summary(selected, out_dir)
    for by_metric in selected.values():
        for table in by_metric.values():
            print(table.render())
            print()
    return EXIT_OK


def cmd_list_mechanisms() -> int:
    for mech in ALL_MECHANISMS:
        kind = "longitudinal" if mech in LONGITUDINAL_MECHANISMS else "one-shot"
        print(f"{mech}\t{kind}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "summarize":
            return cmd_summarize(args)
        return cmd_list_mechanisms()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LdpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
