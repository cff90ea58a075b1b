# modnet/app.py
"""
Entry point of the `modnet` command-line tool.

Sets up logging, builds the argument parser from the subcommand registry in
`modnet.commands` and maps every outcome to an exit code:

    0  success
    1  usage error or unexpected failure
    2  invalid input data or configuration
    3  solver stopped on a time or iteration limit (outputs are still written)
"""

import argparse
import logging
import sys
from typing import List, NoReturn, Optional, Sequence

from . import __version__
from .commands import all_commands
from .config import LOG_LEVEL_ENV, log_level_from_env
from .exceptions import ModnetError

logger = logging.getLogger("modnet")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"


# --- Logging Setup ---

def setup_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, datefmt=LOG_DATEFMT)
    logger.setLevel(level.upper())


# --- Parser ---

class UsageError(Exception):
    """Raised by the parser instead of exiting, so main() can return exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="modnet",
        description="Integrated Mobility-on-Demand and transit network design.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None, help="TOML or JSON file with [design] and [benders] sections.")
    parser.add_argument("--seed", type=int, default=0, help="Seed for instance generation (recorded in manifests).")
    parser.add_argument("--jobs", type=int, default=None, help="Worker threads (default: available parallelism).")
    parser.add_argument(
        "--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help=f"Log level (default: ${LOG_LEVEL_ENV} or INFO).",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    for register in all_commands:
        register(subparsers)
    return parser


# --- Main ---

def main(argv: Optional[Sequence[str]] = None) -> int:
    args_list: List[str] = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(args_list)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(str(e), file=sys.stderr)
        return 1
    except SystemExit as e:  # --version and --help
        return int(e.code or 0)

    setup_logging(args.log_level or log_level_from_env())
    if args.jobs is not None and args.jobs < 1:
        print("modnet: --jobs must be at least 1", file=sys.stderr)
        return 1
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help(sys.stderr)
        return 1

    logger.info(f"modnet {__version__}: running '{args.command}'.")
    try:
        return handler(args, args_list)
    except ModnetError as e:
        logger.error(f"Command '{args.command}' failed: {e}", exc_info=True)
        print(f"modnet {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.critical(f"Unexpected error in '{args.command}': {e}", exc_info=True)
        print(f"modnet {args.command}: unexpected error: {e}", file=sys.stderr)
        return 1


def main_cli_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_cli_entry()
