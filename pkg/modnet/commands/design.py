# modnet/commands/design.py
"""`modnet design`: choose lines, frequencies and fleets with Benders or the monolith MILP."""

import argparse
import logging
from typing import Any, Dict, Sequence

from .. import services
from . import add_budget_flags, add_out_flag, parse_cuts, parse_method, resolve

logger = logging.getLogger(__name__)


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser("design", help="Solve the integrated network design problem.")
    parser.add_argument("network", help="Network directory.")
    parser.add_argument("--method", type=parse_method, choices=["monolith", "classic", "enhanced"], default=None,
                        help="monolith (alias gurobi-style-monolith), classic or enhanced.")
    parser.add_argument("--cuts", type=parse_cuts, default=None,
                        help="Comma list of disagg, clique-cover, multi, cleanup (or 'none').")
    parser.add_argument("--epsilon", type=float, default=None, help="Absolute UB-LB tolerance.")
    parser.add_argument("--time-limit", type=float, default=None, help="Wall-clock limit in seconds.")
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--pool-size", type=int, default=None,
                        help="Extra master pool solutions evaluated per iteration.")
    parser.add_argument("--pool-gap", type=float, default=None)
    parser.add_argument("--trace", default=None, help="Write the iteration trace here instead of <out>/trace.csv.")
    parser.add_argument("--dump-model", default=None, help="Write the linearized design MILP in text form.")
    add_budget_flags(parser)
    add_out_flag(parser, "out/design")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    overrides: Dict[str, Any] = {
        "method": args.method,
        "epsilon": args.epsilon,
        "time_limit": args.time_limit,
        "max_iterations": args.max_iterations,
        "multiple_solutions": args.pool_size,
        "pool_gap": args.pool_gap,
    }
    for key, value in (args.cuts or {}).items():
        if overrides.get(key) is None:
            overrides[key] = value
    design_config, benders_config = resolve(args, benders_overrides=overrides)
    manifest = services.start_manifest(
        "design", argv, [args.network, args.config], design_config, benders_config, args.seed
    )
    run_result = services.design(
        args.network, design_config, benders_config, args.out, manifest,
        trace_path=args.trace, dump_model_path=args.dump_model,
    )
    print(f"{run_result.method}: objective {run_result.upper_bound:.6f}, gap {run_result.gap_pct:.6f}%, "
          f"{run_result.iterations} iteration(s); design {run_result.incumbent.describe()}")
    return 0
