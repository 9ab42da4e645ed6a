"""Command line front end: run experiments, list fixtures, self-check."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, parse_config_file, parse_config_text
from .fixtures import FAMILIES, available_fixtures
from .runner import run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paclab",
        description="Simulation laboratory for learning over finite domains.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="execute an experiment config")
    run_parser.add_argument("config", help="path to a config file")

    commands.add_parser("fixtures", help="list available fixture families")

    selftest = commands.add_parser("selftest", help="run the identity check suite")
    selftest.add_argument("--seed", type=int, default=0)
    selftest.add_argument("--trials", type=int, default=1000)
    selftest.add_argument("--chunk-size", type=int, default=100)
    selftest.add_argument("--output", default="selftest.csv")

    commands.add_parser("version", help="print the tool version")
    return parser


def _cmd_run(path: str) -> int:
    try:
        config = parse_config_file(path)
    except ConfigError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        result = run(config)
    except ConfigError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in result.summary_lines:
        print(line)
    return 0 if result.ok else 1


def _cmd_fixtures() -> int:
    for name in available_fixtures():
        doc = (FAMILIES[name].__doc__ or "").strip().splitlines()
        blurb = doc[0] if doc else ""
        print(f"{name}: {blurb}")
    return 0


def _cmd_selftest(seed: int, trials: int, chunk_size: int, output: str) -> int:
    text = "\n".join(
        [
            "[experiment]",
            "kind = identities",
            f"seed = {seed}",
            f"trials = {trials}",
            f"output = {output}",
            "",
            "[identities]",
            f"chunk_size = {chunk_size}",
        ]
    )
    try:
        config = parse_config_text(text)
        result = run(config)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in result.summary_lines:
        print(line)
    return 0 if result.ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args.config)
    if args.command == "fixtures":
        return _cmd_fixtures()
    if args.command == "selftest":
        return _cmd_selftest(args.seed, args.trials, args.chunk_size, args.output)
    print(f"paclab {__version__}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
