# modnet/commands/validate.py
"""`modnet validate`: parse a network directory and check it can be designed on."""

import argparse
import json
import logging
from typing import Any, Sequence

from .. import services
from . import resolve

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("validate", help="Check a network directory.")
    parser.add_argument("network", help="Network directory.")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    design_config, _ = resolve(args)
    report = services.validate(args.network, design_config)
    print(json.dumps(report, indent=2))
    return 0
