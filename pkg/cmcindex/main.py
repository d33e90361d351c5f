"""
Command-line application factory
Main entry point for the cmcindex pipeline
"""

import argparse
import sys
from typing import Optional, Sequence

from cmcindex import __version__
from cmcindex.commands import COMMANDS
from cmcindex.config import settings
from cmcindex.errors import CmcError
from cmcindex.utils.logger import get_logger, setup_logging

logger = get_logger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with every subcommand registered"""
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Morse index information for constant mean curvature tori",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides CMC_LOG_LEVEL")
    parser.add_argument("--log-file", default=None, help="overrides CMC_LOG_FILE; empty disables file logs")
    parser.add_argument("--debug", action="store_true", default=None, help="colored console logs")

    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run a subcommand

    Returns:
        Exit code: 0 ok, 2 configuration error, 3 numerical failure, 4 property violation
    """
    parser = create_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level, log_file=args.log_file, debug=args.debug)
    logger.debug(f"Running {args.command}", extra={"stage": "cli"})

    try:
        return args.handler(args)
    except CmcError as e:
        logger.error(f"{type(e).__name__}: {e.message}", extra={"stage": "cli"})
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        logger.error(f"Invalid input: {e}", extra={"stage": "cli"})
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        logger.error(f"I/O failure: {e}", extra={"stage": "cli"})
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
