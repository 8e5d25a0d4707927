"""Command line interface for PulseArea.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 audit failure.
"""

import argparse
import logging
from collections.abc import Sequence
from dataclasses import replace

from pydantic import ValidationError

from . import __version__
from .config import load_config
from .exceptions import ConfigError, SolverError
from .output import FIGURE_COLUMNS
from .runner import SweepRunner

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_AUDIT = 3


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with simulate, figures and audit subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat JSON config file (default: ./pulsearea.json if present)")
    common.add_argument("--out", metavar="DIR", help="output directory, overrides config and environment")
    common.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")

    parser = argparse.ArgumentParser(prog="pulsearea", description="Dissipative pulse-area solver")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common], help="write one trajectory file per lambda")
    simulate.add_argument("--method", choices=["quadrature", "ivp"], help="solver route (default from config)")

    figures = commands.add_parser("figures", parents=[common], help="write the data behind figure 1, 2 or 3")
    figures.add_argument("--which", type=int, choices=sorted(FIGURE_COLUMNS), required=True)
    figures.add_argument("--method", choices=["quadrature", "ivp"], help="solver route (default from config)")

    commands.add_parser("audit", parents=[common], help="audit every lambda and write audit_summary.json")
    return parser


def run(args: argparse.Namespace) -> int:
    """Execute a parsed command and return its exit code."""
    try:
        config = load_config(args.config)
        if args.out:
            config = replace(config, out_dir=args.out)
        runner = SweepRunner.create(config)
    except (ConfigError, ValidationError) as e:
        key = getattr(e, "key", None)
        logger.error(f"Configuration error{f' in {key!r}' if key else ''}: {e}")
        return EXIT_CONFIG

    try:
        if args.command == "simulate":
            runner.simulate(args.method)
        elif args.command == "figures":
            runner.figures(args.which, args.method)
        else:
            sweep, _ = runner.audit()
            if not sweep.passed:
                for failure in sweep.failures():
                    logger.error(f"Audit check failed: {failure}")
                return EXIT_AUDIT
    except SolverError as e:
        logger.error(f"Solver failed: {e}")
        return EXIT_SOLVER
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point for the command line."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    return run(args)


if __name__ == "__main__":
    raise SystemExit(main())
