"""Command-line entry point: ``spinsqueeze <config> [--mode M] [--out DIR] [--workers K] [--svg]``.

Exit codes are 0 on success, 1 for configuration errors and 2 for numerical
failures.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import MODES, ConfigError, parse_config
from .runner import EXIT_CONFIG, EXIT_NUMERICAL, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinsqueeze",
        description="Phonon-mediated spin squeezing: budgets, simulations and sweeps.")
    parser.add_argument("config", help="scenario file (flat 'section.key = value' text)")
    parser.add_argument("--mode", choices=MODES, help="override run.mode")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--workers", type=int,
                        help="parallel sweep workers (default: $SPINSQUEEZE_WORKERS or sweep.workers)")
    parser.add_argument("--svg", action="store_true", help="also write SVG plots of xi^2")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _workers(arg: int | None) -> int | None:
    if arg is not None:
        if arg < 1:
            raise ConfigError("--workers must be >= 1")
        return arg
    env = os.environ.get("SPINSQUEEZE_WORKERS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"SPINSQUEEZE_WORKERS={env!r} is not an integer") from None
        if value < 1:
            raise ConfigError("SPINSQUEEZE_WORKERS must be >= 1")
        return value
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text)
        if args.mode and args.mode != cfg.mode:
            cfg = cfg.with_values({"run.mode": args.mode})
        workers = _workers(args.workers)
    except (ConfigError, OSError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run(cfg, out_dir=args.out, workers=workers, svg=True if args.svg else None)
    print(report.render())
    if report.exit_code == EXIT_NUMERICAL:
        print(f"numerical failure: {report.error}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
