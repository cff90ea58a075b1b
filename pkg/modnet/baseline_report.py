# modnet/baseline_report.py
"""
Transit-only baseline, integrated-vs-baseline comparison and the budget
sensitivity grid.

The baseline drops the road layer, keeps every candidate route open and
chooses frequencies only. Scenario summaries are recomputed from the
assignment at the chosen design.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd

from .assignment import (
    AssignmentSolution,
    estimate_wait_upper_bounds,
    evaluate_design,
    in_vehicle_minutes,
    mode_shares,
)
from .benders import BendersRun, run_enhanced, run_method
from .design_model import DesignDecision, DesignSpace, WaitBounds
from .exceptions import ModnetError, SubproblemInfeasibleError
from .models import (
    GRID_COLUMNS,
    SENTINEL_FLEET,
    BendersConfig,
    ComparisonReport,
    DesignConfig,
    GridCell,
    RouteRow,
    ScenarioSummary,
)
from .network import MultimodalNetwork, transit_only_view

logger = logging.getLogger(__name__)


# --- Summaries ---

def route_table(space: DesignSpace, design: Optional[DesignDecision]) -> List[RouteRow]:
    """One row per candidate route; the wait column is the mean headway-equivalent wait 60/f."""
    rows: List[RouteRow] = []
    for line in space.lines:
        if design is not None and design.is_open(line):
            f = design.frequencies[line]
            rows.append(RouteRow(
                route=line, located=True, frequency_per_hour=f,
                buses=space.bus_cost[(line, f)], mean_headway_wait_min=60.0 / f,
            ))
        else:
            rows.append(RouteRow(route=line, located=False))
    return rows


def scenario_summary(
    name: str,
    network: MultimodalNetwork,
    space: DesignSpace,
    design: DesignDecision,
    solution: AssignmentSolution,
) -> ScenarioSummary:
    """
    Comparison column for one scenario.

    Averages are taken over served trips only. Average in-vehicle time is the
    travel time spent on transit and road links per served trip, without fares
    or walking; average wait is the wait part (transit plus road) of the
    objective per served trip.
    """
    served = solution.served_trips
    total = solution.total_trips
    wait = solution.transit_wait + solution.road_wait
    return ScenarioSummary(
        name=name,
        active_routes=len(design.frequencies),
        buses_used=space.buses_used(design),
        vehicles_used=space.vehicles_used(design),
        total_trips=total,
        served_trips=served,
        satisfied_demand_pct=100.0 * served / total if total > 0 else 100.0,
        avg_in_vehicle_min=in_vehicle_minutes(network, solution) / served if served > 0 else 0.0,
        avg_wait_min=wait / served if served > 0 else 0.0,
        total_cost_min=solution.objective,
        in_vehicle_cost_min=solution.link_cost_total,
        road_wait_min=solution.road_wait,
        transit_wait_min=solution.transit_wait,
        routes=route_table(space, design),
        fleet_by_zone={z: design.fleet(z) for z in space.zones},
    )


# --- Integrated scenario ---

@dataclass
class ScenarioResult:
    summary: ScenarioSummary
    design: Optional[DesignDecision] = None
    solution: Optional[AssignmentSolution] = None
    run: Optional[BendersRun] = None


def solve_integrated(
    network: MultimodalNetwork,
    design_config: DesignConfig,
    benders_config: Optional[BendersConfig] = None,
    wait_bounds: Optional[WaitBounds] = None,
) -> ScenarioResult:
    """Design the integrated MoD + transit system and summarize it."""
    config = benders_config or BendersConfig()
    run = run_method(network, design_config, config, wait_bounds)
    space = DesignSpace(network, design_config)
    solution = evaluate_design(network, run.incumbent, design_config, jobs=config.jobs)
    summary = scenario_summary("integrated", network, space, run.incumbent, solution)
    summary.status = run.status
    return ScenarioResult(summary, run.incumbent, solution, run)


# --- Baseline ---

def baseline_config(design_config: DesignConfig, allow_closed_routes: bool = False) -> DesignConfig:
    """Fleet menu reduced to the sentinel; every route forced open unless closing is allowed."""
    return design_config.model_copy(update={
        "omega": [SENTINEL_FLEET],
        "force_all_lines_open": not allow_closed_routes,
    })


def minimum_buses(space: DesignSpace) -> int:
    """Buses needed to run every candidate route at the lowest menu frequency."""
    return int(sum(min(space.bus_cost[(line, f)] for f in space.thetas) for line in space.lines))


def solve_baseline(
    network: MultimodalNetwork,
    design_config: DesignConfig,
    benders_config: Optional[BendersConfig] = None,
    allow_closed_routes: bool = False,
) -> ScenarioResult:
    """
    Optimize frequencies of the transit-only system.

    OD pairs that cannot be served without the road layer are reported as
    unsatisfied demand. When the bus budget cannot cover every route at the
    lowest frequency the result carries status "infeasible" and an
    explanation instead of a design.
    """
    view = transit_only_view(network)
    config = baseline_config(design_config, allow_closed_routes)
    space = DesignSpace(view, config)
    needed = minimum_buses(space)
    if not allow_closed_routes and needed > config.bus_budget:
        explanation = (
            f"Running all {len(space.lines)} route(s) at {min(space.thetas):g} buses/hr needs {needed} buses; "
            f"the budget is {config.bus_budget:g}."
        )
        logger.warning(f"Baseline infeasible: {explanation}")
        summary = ScenarioSummary(
            name="baseline", status="infeasible", explanation=explanation,
            total_trips=view.demand.total, routes=route_table(space, None),
        )
        return ScenarioResult(summary)

    benders = (benders_config or BendersConfig()).model_copy(update={"method": "enhanced"})
    try:
        run = run_enhanced(view, config, benders, require_road=False)
    except SubproblemInfeasibleError as e:
        explanation = f"Closing routes left destination {e.destination} unreachable; keep all routes open."
        logger.warning(f"Baseline infeasible: {explanation}")
        summary = ScenarioSummary(
            name="baseline", status="infeasible", explanation=explanation,
            total_trips=view.demand.total, routes=route_table(space, None),
        )
        return ScenarioResult(summary)

    solution = evaluate_design(view, run.incumbent, config, jobs=benders.jobs)
    summary = scenario_summary("baseline", view, space, run.incumbent, solution)
    summary.status = run.status
    logger.info(
        f"Baseline: {summary.active_routes} route(s), {summary.buses_used} bus(es), "
        f"{summary.satisfied_demand_pct:.1f}% demand satisfied."
    )
    return ScenarioResult(summary, run.incumbent, solution, run)


# --- Comparison ---

def compare(integrated: ScenarioSummary, baseline: ScenarioSummary) -> ComparisonReport:
    return ComparisonReport(scenarios={"integrated": integrated, "baseline": baseline})


COMPARISON_ROWS: List[Tuple[str, str]] = [
    ("Active routes", "active_routes"),
    ("Buses used", "buses_used"),
    ("Vehicles used", "vehicles_used"),
    ("Satisfied demand (%)", "satisfied_demand_pct"),
    ("Average in-vehicle time (min/passenger)", "avg_in_vehicle_min"),
    ("Average wait time (min/passenger)", "avg_wait_min"),
    ("Total cost (passenger-min)", "total_cost_min"),
]


def comparison_frame(report: ComparisonReport) -> pd.DataFrame:
    """Metrics as rows, scenarios as columns."""
    data = {
        name: [getattr(summary, attr) for _, attr in COMPARISON_ROWS]
        for name, summary in report.scenarios.items()
    }
    return pd.DataFrame(data, index=[label for label, _ in COMPARISON_ROWS])


def write_comparison(report: ComparisonReport, directory: Union[str, Path]) -> Path:
    """Write comparison.json, comparison.csv and one routes_<scenario>.csv per scenario."""
    base = Path(directory)
    base.mkdir(parents=True, exist_ok=True)
    path = base / "comparison.json"
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    comparison_frame(report).to_csv(base / "comparison.csv", index_label="metric", float_format="%.6f")
    for name, summary in report.scenarios.items():
        write_routes(summary, base / f"routes_{name}.csv")
    logger.info(f"Wrote comparison for {sorted(report.scenarios)} to {base}.")
    return path


def write_routes(summary: ScenarioSummary, path: Union[str, Path]) -> None:
    rows = [row.model_dump() for row in summary.routes]
    pd.DataFrame(rows, columns=list(RouteRow.model_fields)).to_csv(path, index=False)


# --- Sensitivity grid ---

@dataclass
class SensitivityGrid:
    """Cells in row-major order: bus budget outer, fleet budget inner."""

    bus_budgets: List[float]
    fleet_budgets: List[float]
    cells: List[GridCell] = field(default_factory=list)

    def cell(self, buses: float, vehicles: float) -> GridCell:
        for c in self.cells:
            if c.buses == buses and c.vehicles == vehicles:
                return c
        raise KeyError((buses, vehicles))

    def frame(self) -> pd.DataFrame:
        columns = GRID_COLUMNS + ["status", "error"]
        return pd.DataFrame([c.model_dump() for c in self.cells], columns=columns)


def _solve_cell(
    network: MultimodalNetwork,
    design_config: DesignConfig,
    benders_config: BendersConfig,
    wait_bounds: WaitBounds,
    buses: float,
    vehicles: float,
) -> GridCell:
    config = design_config.model_copy(update={"bus_budget": buses, "fleet_budget": vehicles})
    try:
        run = run_enhanced(network, config, benders_config, wait_bounds)
        solution = evaluate_design(network, run.incumbent, config)
        shares = mode_shares(solution, network)
    except ModnetError as e:
        logger.error(f"Grid cell (B={buses:g}, F={vehicles:g}) failed: {e}", exc_info=True)
        return GridCell(buses=buses, vehicles=vehicles, status="error", error=str(e))
    logger.info(f"Grid cell (B={buses:g}, F={vehicles:g}): total {solution.objective / 60.0:.4f} h.")
    return GridCell(
        buses=buses,
        vehicles=vehicles,
        ivt_hr=solution.link_cost_total / 60.0,
        road_wait_hr=solution.road_wait / 60.0,
        transit_wait_hr=solution.transit_wait / 60.0,
        total_hr=solution.objective / 60.0,
        share_mod=shares.mod,
        share_transit=shares.transit,
        share_multi=shares.multimodal,
        routes_located=len(run.incumbent.frequencies),
        status=run.status,
    )


def run_sensitivity(
    network: MultimodalNetwork,
    design_config: DesignConfig,
    bus_budgets: Sequence[float],
    fleet_budgets: Sequence[float],
    benders_config: Optional[BendersConfig] = None,
    jobs: int = 1,
) -> SensitivityGrid:
    """
    One enhanced Benders solve per (B̄, F̄) cell.

    Wait bounds depend on the frequency and fleet menus, never on the
    budgets, and are estimated once. A cell
    that fails is recorded with its error and the grid continues.
    """
    if not bus_budgets or not fleet_budgets:
        raise ValueError("bus and fleet budget lists must be nonempty")

    config = (benders_config or BendersConfig()).model_copy(update={"method": "enhanced", "jobs": 1})
    bounds = estimate_wait_upper_bounds(network, design_config)
    pairs = [(float(b), float(f)) for b in bus_budgets for f in fleet_budgets]
    logger.info(f"Sensitivity grid: {len(bus_budgets)} x {len(fleet_budgets)} cell(s), {jobs} worker(s).")
    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(lambda p: _solve_cell(network, design_config, config, bounds, *p), pairs))
    else:
        cells = [_solve_cell(network, design_config, config, bounds, b, f) for b, f in pairs]
    return SensitivityGrid([float(b) for b in bus_budgets], [float(f) for f in fleet_budgets], cells)


def write_grid(grid: SensitivityGrid, path: Union[str, Path]) -> None:
    grid.frame().to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Wrote {len(grid.cells)} grid cell(s) to {path}.")
