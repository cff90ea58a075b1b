# modnet/commands/generate.py
"""`modnet generate`: export a synthetic instance as network CSVs."""

import argparse
import logging
from typing import Any, Sequence

from .. import services

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("generate", help="Write a synthetic instance to a directory.")
    parser.add_argument("instance", choices=list(services.GENERATORS))
    parser.add_argument("out", help="Target directory.")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    path = services.generate(args.instance, args.out, seed=args.seed)
    print(f"{args.instance} written to {path}")
    return 0
