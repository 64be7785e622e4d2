"""
Command line entry point::

    toric-quench [-v | -q] run CONFIG [--set KEY=VALUE]... [--out-dir DIR] [--threads N] [--seed N]

Exit status is 0 on success, 1 when a pass/fail check (OracleCheck) fails, and 2 for invalid configuration or a
numerical error, reported in one line on stderr.
"""
import argparse
import logging
import multiprocessing
import sys
from pathlib import Path
from typing import List
from typing import Optional
from typing import Sequence

from toric_quench import __version__
from toric_quench.config import ExperimentConfig
from toric_quench.config import load_config
from toric_quench.errors import ToricQuenchError
from toric_quench.runner import RunResult
from toric_quench.runner import run

__all__ = ["build_parser", "main", "cli", "execute"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric-quench", description="Free-fermion quench simulations of disordered toric-code chains"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")

    commands = parser.add_subparsers(dest="command", required=True)
    run_parser = commands.add_parser("run", help="run the experiment described by a config file")
    run_parser.add_argument("config", type=Path, help="key = value config file")
    run_parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config key"
    )
    run_parser.add_argument("--out-dir", type=Path, default=None, help="output directory (config key output_path)")
    run_parser.add_argument("--threads", type=int, default=None, help="worker processes for realizations")
    run_parser.add_argument("--seed", type=int, default=None, help="master seed (config key master_seed)")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def execute(config: ExperimentConfig) -> RunResult:
    """Run with a process pool when more than one worker is configured"""
    if config.threads <= 1:
        return run(config)
    logger.info("using %d worker processes", config.threads)
    with multiprocessing.Pool(config.threads) as pool:
        return run(config, pool.imap)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)

    flags = {"output_path": args.out_dir, "threads": args.threads, "master_seed": args.seed}
    try:
        config = load_config(args.config, args.overrides, flags)
        result = execute(config)
    except ToricQuenchError as e:
        print(f"toric-quench: error: {e}", file=sys.stderr)
        return EXIT_ERROR

    if not result.passed:
        logger.error("check failed; see summary in %s", config.output_path)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cli(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))


if __name__ == "__main__":
    cli()
