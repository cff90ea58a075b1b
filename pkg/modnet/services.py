# modnet/services.py
"""
Service layer for modnet-design.

Each subcommand in `modnet.commands` parses its flags and hands over to one
function here. These functions load inputs, run the solvers and write every
output file together with a manifest.json, so the command modules stay thin
and the same workflows can be driven from Python.
"""

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd
from pydantic import ValidationError

from . import __version__
from .assignment import (
    AssignmentProblem,
    AssignmentSolution,
    estimate_wait_upper_bounds,
    evaluate_design,
    flow_rows,
    mode_shares,
    solve_assignment,
    wait_rows,
)
from .baseline_report import (
    compare,
    run_sensitivity,
    scenario_summary,
    solve_baseline,
    solve_integrated,
    write_comparison,
    write_grid,
    write_routes,
)
from .benders import BendersRun, run_method
from .design_model import DesignDecision, DesignSpace, build_design_milp
from .exceptions import ConfigError, NetworkDataError, SolverLimitReached
from .models import BendersConfig, DesignConfig, DesignFile, RunManifest
from .network import MultimodalNetwork, check_road_connected, load_network_dir
from .solver_kernel import write_model
from .synthetic import hub_network, mid_size_instance, sample_network, sioux_falls_network, toy_instance, write_instance

logger = logging.getLogger(__name__)

NETWORK_FILES = ("nodes.csv", "links.csv", "lines.csv", "demand.csv")


# --- Manifest ---

def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def input_hashes(paths: Iterable[Optional[Union[str, Path]]]) -> Dict[str, str]:
    """SHA-256 of every existing input file; directories contribute their network CSVs."""
    hashes: Dict[str, str] = {}
    for p in paths:
        if p is None:
            continue
        path = Path(p)
        if path.is_dir():
            for name in NETWORK_FILES:
                if (path / name).is_file():
                    hashes[str(path / name)] = file_sha256(path / name)
        elif path.is_file():
            hashes[str(path)] = file_sha256(path)
    return hashes


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def start_manifest(
    command: str,
    argv: Sequence[str],
    inputs: Iterable[Optional[Union[str, Path]]],
    design_config: Optional[DesignConfig] = None,
    benders_config: Optional[BendersConfig] = None,
    seed: int = 0,
) -> RunManifest:
    config: Dict[str, Any] = {}
    if design_config is not None:
        config["design"] = design_config.model_dump(mode="json")
    if benders_config is not None:
        config["benders"] = benders_config.model_dump(mode="json")
    return RunManifest(
        command=command, argv=list(argv), config=config, input_hashes=input_hashes(inputs),
        seed=seed, version=__version__, started_at=_now(),
    )


def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    manifest.finished_at = _now()
    path = Path(out_dir) / "manifest.json"
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.debug(f"Wrote manifest {path}.")
    return path


# --- Inputs ---

def load_network_input(directory: Union[str, Path]) -> MultimodalNetwork:
    path = Path(directory)
    if not path.is_dir():
        raise NetworkDataError("Network directory not found", file=str(path))
    return load_network_dir(path)


def load_design_file(path: Union[str, Path]) -> DesignDecision:
    """Read a design.json (open lines with frequency, fleet per zone)."""
    design_path = Path(path)
    if not design_path.is_file():
        raise ConfigError(f"Design file not found: {design_path}")
    try:
        payload = DesignFile.model_validate_json(design_path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"Invalid design file {design_path}: {e.errors()[0].get('msg')}") from e
    return DesignDecision(dict(payload.frequencies), dict(payload.fleets))


def design_payload(design: DesignDecision, objective: Optional[float] = None, status: Optional[str] = None) -> DesignFile:
    return DesignFile(
        frequencies=dict(sorted(design.frequencies.items())),
        fleets=dict(sorted(design.fleets.items())),
        objective=objective,
        status=status,
    )


def _out_dir(path: Union[str, Path]) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- Outputs ---

def write_assignment_outputs(
    network: MultimodalNetwork, solution: AssignmentSolution, out_dir: Path
) -> Dict[str, Any]:
    """flows.csv, waits.csv and summary.json; returns the summary payload."""
    flows = pd.DataFrame(flow_rows(network, solution),
                         columns=["linkId", "fromNodeId", "toNodeId", "kind", "destination", "flow"])
    flows.to_csv(out_dir / "flows.csv", index=False, float_format="%.10g")
    waits = pd.DataFrame(wait_rows(network, solution), columns=["nodeId", "destination", "wait"])
    waits.to_csv(out_dir / "waits.csv", index=False, float_format="%.10g")
    summary = {
        "objective": solution.objective,
        "link_cost": solution.link_cost_total,
        "transit_wait": solution.transit_wait,
        "road_wait": solution.road_wait,
        "served_trips": solution.served_trips,
        "total_trips": solution.total_trips,
        "unsatisfied": [list(pair) for pair in solution.unsatisfied],
        "per_destination": dict(sorted(solution.per_destination.items())),
        "mode_shares": mode_shares(solution, network).as_dict(),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return summary


# --- Workflows ---

def assign(
    network_dir: Union[str, Path],
    design_path: Union[str, Path],
    design_config: DesignConfig,
    out_dir: Union[str, Path],
    manifest: RunManifest,
    jobs: int = 1,
) -> AssignmentSolution:
    """Evaluate a fixed design: solve the assignment LP and write flows, waits and the summary."""
    network = load_network_input(network_dir)
    design = load_design_file(design_path)
    space = DesignSpace(network, design_config)
    unknown = sorted(set(design.frequencies) - set(space.lines))
    if unknown:
        raise ConfigError(f"Design file {design_path} names unknown line(s) {unknown}")
    out = _out_dir(out_dir)
    solution = solve_assignment(AssignmentProblem(network, design, design_config), jobs=jobs)
    write_assignment_outputs(network, solution, out)
    write_manifest(manifest, out)
    logger.info(f"Assignment written to {out} (objective {solution.objective:.4f}).")
    return solution


def design(
    network_dir: Union[str, Path],
    design_config: DesignConfig,
    benders_config: BendersConfig,
    out_dir: Union[str, Path],
    manifest: RunManifest,
    trace_path: Optional[Union[str, Path]] = None,
    dump_model_path: Optional[Union[str, Path]] = None,
) -> BendersRun:
    """
    Solve the design problem with the configured method.

    Writes design.json, trace.csv, routes.csv and the assignment outputs of
    the incumbent. A run stopped by a time or iteration limit still writes
    everything and then raises SolverLimitReached.
    """
    network = load_network_input(network_dir)
    out = _out_dir(out_dir)
    space = DesignSpace(network, design_config)
    bounds = estimate_wait_upper_bounds(network, design_config, space, jobs=benders_config.jobs)
    if dump_model_path is not None:
        milp = build_design_milp(network, design_config, bounds, space=space)
        write_model(milp.model, dump_model_path)
        logger.info(f"Dumped design MILP ({milp.model.num_vars} columns) to {dump_model_path}.")

    run = run_method(network, design_config, benders_config, wait_bounds=bounds)
    run.write_trace(trace_path or out / "trace.csv")
    payload = design_payload(run.incumbent, run.upper_bound, run.status)
    (out / "design.json").write_text(payload.model_dump_json(indent=2), encoding="utf-8")
    solution = evaluate_design(network, run.incumbent, design_config, jobs=benders_config.jobs)
    write_assignment_outputs(network, solution, out)
    write_routes(scenario_summary("integrated", network, space, run.incumbent, solution), out / "routes.csv")
    write_manifest(manifest, out)
    if not run.converged:
        raise SolverLimitReached(
            f"{run.method} stopped with status '{run.status}' at gap {run.gap_pct:.4f}% "
            f"(UB {run.upper_bound:.6f}, LB {run.lower_bound:.6f})",
            run,
        )
    return run


def baseline(
    network_dir: Union[str, Path],
    design_config: DesignConfig,
    benders_config: BendersConfig,
    out_dir: Union[str, Path],
    manifest: RunManifest,
    allow_closed_routes: bool = False,
) -> Dict[str, Any]:
    network = load_network_input(network_dir)
    out = _out_dir(out_dir)
    result = solve_baseline(network, design_config, benders_config, allow_closed_routes)
    (out / "baseline.json").write_text(result.summary.model_dump_json(indent=2), encoding="utf-8")
    write_routes(result.summary, out / "routes.csv")
    if result.design is not None:
        payload = design_payload(result.design, result.summary.total_cost_min, result.summary.status)
        (out / "design.json").write_text(payload.model_dump_json(indent=2), encoding="utf-8")
    write_manifest(manifest, out)
    return result.summary.model_dump()


def compare_scenarios(
    network_dir: Union[str, Path],
    design_config: DesignConfig,
    benders_config: BendersConfig,
    out_dir: Union[str, Path],
    manifest: RunManifest,
) -> Path:
    """Integrated design and transit-only baseline side by side (comparison.json / comparison.csv)."""
    network = load_network_input(network_dir)
    out = _out_dir(out_dir)
    integrated = solve_integrated(network, design_config, benders_config)
    base = solve_baseline(network, design_config, benders_config)
    path = write_comparison(compare(integrated.summary, base.summary), out)
    write_manifest(manifest, out)
    return path


def sweep(
    network_dir: Union[str, Path],
    design_config: DesignConfig,
    benders_config: BendersConfig,
    bus_budgets: Sequence[float],
    fleet_budgets: Sequence[float],
    out_dir: Union[str, Path],
    manifest: RunManifest,
    jobs: int = 1,
) -> Path:
    network = load_network_input(network_dir)
    out = _out_dir(out_dir)
    grid = run_sensitivity(network, design_config, bus_budgets, fleet_budgets, benders_config, jobs=jobs)
    path = out / "grid.csv"
    write_grid(grid, path)
    write_manifest(manifest, out)
    failed = [c for c in grid.cells if c.status == "error"]
    if failed:
        logger.warning(f"{len(failed)} grid cell(s) failed; see the error column of {path}.")
    return path


def validate(network_dir: Union[str, Path], design_config: Optional[DesignConfig] = None) -> Dict[str, Any]:
    """
    Load and check a network directory.

    Raises:
        NetworkDataError: Parse errors, or road and walking links that cannot
            carry every origin to its destinations.
    """
    network = load_network_input(network_dir)
    report: Dict[str, Any] = {"counts": network.summary()}
    report["waiting_nodes"] = len(network.waiting_nodes)
    report["unreachable_pairs"] = [list(p) for p in network.unreachable_pairs()]
    report["road_connected"] = check_road_connected(network)
    if design_config is not None:
        space = DesignSpace(network, design_config)
        report["design_binaries"] = space.size
        report["bus_cost"] = {f"{l}@{f:g}": c for (l, f), c in sorted(space.bus_cost.items())}
    if not report["road_connected"]:
        raise NetworkDataError(
            "Road and walking links do not connect every origin and road node to every destination",
            file=str(network_dir),
        )
    logger.info(f"Network {network_dir} is valid: {report['counts']}.")
    return report


GENERATORS = ("sample", "hub", "corridor", "triangle", "square", "sioux-falls", "mid-size")


def generate(name: str, out_dir: Union[str, Path], seed: int = 0) -> Path:
    """Export a synthetic instance as network CSVs (plus config.json where the instance has one)."""
    config: Optional[DesignConfig] = None
    if name == "sample":
        network = sample_network()
    elif name == "hub":
        network = hub_network()
    elif name in ("corridor", "triangle", "square"):
        network, config = toy_instance(name)
    elif name == "sioux-falls":
        config = DesignConfig()
        network = sioux_falls_network(config, seed=seed)
    elif name == "mid-size":
        network, config = mid_size_instance(seed)
    else:
        raise ConfigError(f"Unknown instance '{name}'; choose from {list(GENERATORS)}")
    return write_instance(network, out_dir, config)


def parse_budgets(text: str, what: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Could not parse {what} list '{text}': {e}") from e
    if not values:
        raise ConfigError(f"Empty {what} list")
    return values
