# modnet/commands/__init__.py
"""
Subcommands of the `modnet` executable.

Each module in this package exposes `register(subparsers)`, which adds its
subparser and binds a handler `run(args, argv) -> int`. The handlers call
into `modnet.services`. Helpers shared by several commands are defined here,
before the command modules are imported.
"""
import argparse
import logging
import os
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..config import resolve_config
from ..models import BendersConfig, DesignConfig

logger = logging.getLogger("modnet.commands")

CUT_TOKENS = ("disagg", "clique-cover", "multi", "cleanup")
METHOD_ALIASES = {"gurobi-style-monolith": "monolith"}
# Extra master pool solutions per iteration behind the `multi` token.
MULTI_POOL_SOLUTIONS = 2


def add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--bus-budget", type=float, default=None, help="Buses available (B̄).")
    parser.add_argument("--fleet-budget", type=float, default=None, help="MoD vehicles available (F̄).")


def add_out_flag(parser: argparse.ArgumentParser, default: str) -> None:
    parser.add_argument("--out", default=default, help=f"Output directory (default: {default}).")


def parse_cuts(text: Optional[str]) -> Dict[str, Any]:
    """
    `--cuts disagg,clique-cover,multi` to BendersConfig toggles; 'none' turns every toggle off.

    `multi` evaluates MULTI_POOL_SOLUTIONS extra master solutions per iteration
    unless --pool-size says otherwise.
    """
    if text is None:
        return {}
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if tokens == ["none"]:
        tokens = []
    unknown = sorted(set(tokens) - set(CUT_TOKENS))
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown cut option(s) {unknown}; choose from {list(CUT_TOKENS)} or 'none'")
    return {
        "disaggregated": "disagg" in tokens,
        "clique_cover": "clique-cover" in tokens,
        "multiple_solutions": MULTI_POOL_SOLUTIONS if "multi" in tokens else 0,
        "cut_cleanup": "cleanup" in tokens,
    }


def parse_method(text: str) -> str:
    return METHOD_ALIASES.get(text, text)


def resolve(
    args: argparse.Namespace,
    design_overrides: Optional[Dict[str, Any]] = None,
    benders_overrides: Optional[Dict[str, Any]] = None,
) -> Tuple[DesignConfig, BendersConfig]:
    """
    Configs with precedence CLI flag > --config file > defaults.

    Without --jobs and without a config value, jobs is the available parallelism.
    """
    design = dict(design_overrides or {})
    design.setdefault("bus_budget", getattr(args, "bus_budget", None))
    design.setdefault("fleet_budget", getattr(args, "fleet_budget", None))
    benders = dict(benders_overrides or {})
    benders["jobs"] = args.jobs
    benders["seed"] = args.seed
    design_config, benders_config = resolve_config(args.config, design, benders)
    if args.jobs is None and "jobs" not in benders_config.model_fields_set:
        benders_config = benders_config.model_copy(update={"jobs": os.cpu_count() or 1})
    return design_config, benders_config


# --- Import command modules; each one registers a subparser ---
from . import assign, baseline, compare, design, generate, sweep, validate  # noqa: E402

all_commands: List[Callable[[Any], None]] = [
    assign.register,
    design.register,
    baseline.register,
    compare.register,
    sweep.register,
    validate.register,
    generate.register,
]

logger.debug(f"Collected {len(all_commands)} subcommand registrar(s).")
