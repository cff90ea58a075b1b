# modnet/commands/sweep.py
"""`modnet sweep`: bus-budget x fleet-budget sensitivity grid."""

import argparse
import logging
from typing import Any, Sequence

from .. import services
from . import add_out_flag, resolve

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("sweep", help="Solve a grid of (bus budget, fleet budget) cells.")
    parser.add_argument("network", help="Network directory.")
    parser.add_argument("--buses", required=True, help="Comma list of bus budgets, e.g. 25,50,75,100,150.")
    parser.add_argument("--vehicles", required=True, help="Comma list of fleet budgets.")
    add_out_flag(parser, "out/sweep")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    bus_budgets = services.parse_budgets(args.buses, "bus budget")
    fleet_budgets = services.parse_budgets(args.vehicles, "fleet budget")
    design_config, benders_config = resolve(args)
    manifest = services.start_manifest(
        "sweep", argv, [args.network, args.config], design_config, benders_config, args.seed
    )
    path = services.sweep(
        args.network, design_config, benders_config, bus_budgets, fleet_budgets, args.out, manifest,
        jobs=benders_config.jobs,
    )
    print(f"grid written to {path}")
    return 0
