# modnet/commands/compare.py
"""`modnet compare`: integrated design against the transit-only baseline."""

import argparse
import logging
from typing import Any, Sequence

from .. import services
from . import add_budget_flags, add_out_flag, resolve

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("compare", help="Write comparison.json for integrated vs baseline.")
    parser.add_argument("network", help="Network directory.")
    add_budget_flags(parser)
    add_out_flag(parser, "out/compare")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    design_config, benders_config = resolve(args)
    manifest = services.start_manifest(
        "compare", argv, [args.network, args.config], design_config, benders_config, args.seed
    )
    path = services.compare_scenarios(args.network, design_config, benders_config, args.out, manifest)
    print(f"comparison written to {path}")
    return 0
