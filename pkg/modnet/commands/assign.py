# modnet/commands/assign.py
"""`modnet assign`: evaluate a fixed design with the strategy-based assignment."""

import argparse
import logging
from typing import Any, Sequence

from .. import services
from . import add_out_flag, resolve

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("assign", help="Solve the assignment LP for a fixed design.")
    parser.add_argument("network", help="Directory with nodes.csv, links.csv, lines.csv, demand.csv.")
    parser.add_argument("--design", required=True, help="design.json with frequencies and fleets.")
    add_out_flag(parser, "out/assign")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    design_config, benders_config = resolve(args)
    manifest = services.start_manifest(
        "assign", argv, [args.network, args.design, args.config], design_config, None, args.seed
    )
    solution = services.assign(args.network, args.design, design_config, args.out, manifest, jobs=benders_config.jobs)
    print(f"objective {solution.objective:.6f} passenger-min "
          f"(links {solution.link_cost_total:.6f}, transit wait {solution.transit_wait:.6f}, "
          f"road wait {solution.road_wait:.6f}); outputs in {args.out}")
    return 0
