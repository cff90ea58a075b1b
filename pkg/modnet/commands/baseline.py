# modnet/commands/baseline.py
"""`modnet baseline`: optimize frequencies of the transit-only system."""

import argparse
import logging
from typing import Any, Sequence

from .. import services
from . import add_budget_flags, add_out_flag, resolve

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("baseline", help="Transit-only baseline (every route open).")
    parser.add_argument("network", help="Network directory.")
    parser.add_argument("--allow-closed-routes", action="store_true",
                        help="Let the optimizer close routes instead of forcing all open.")
    add_budget_flags(parser)
    add_out_flag(parser, "out/baseline")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    design_config, benders_config = resolve(args)
    manifest = services.start_manifest(
        "baseline", argv, [args.network, args.config], design_config, benders_config, args.seed
    )
    summary = services.baseline(
        args.network, design_config, benders_config, args.out, manifest, args.allow_closed_routes
    )
    if summary["status"] == "infeasible":
        print(f"baseline infeasible: {summary['explanation']}")
        return 2
    print(f"baseline: {summary['active_routes']} route(s), {summary['buses_used']} bus(es), "
          f"{summary['satisfied_demand_pct']:.2f}% demand satisfied; outputs in {args.out}")
    return 0
