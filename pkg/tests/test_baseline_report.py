# tests/test_baseline_report.py
import pytest

from modnet.assignment import estimate_wait_upper_bounds, in_vehicle_minutes
from modnet.baseline_report import (
    compare,
    comparison_frame,
    run_sensitivity,
    solve_baseline,
    solve_integrated,
    write_comparison,
    write_grid,
)
from modnet.benders import run_enhanced
from modnet.models import ComparisonReport, DesignConfig
from modnet.network import DemandMatrix, Link, LinkKind, MultimodalNetwork, Node, NodeKind
from modnet.synthetic import grid_network, toy_config, toy_instance


def _one_line(bus_budget: float = 3.0) -> tuple:
    config = toy_config(bus_budget=bus_budget)
    network = grid_network(
        1, 3, 1.5, {"A": (0, 0), "B": (0, 2)}, {"L1": [(0, 0), (0, 1), (0, 2)]},
        {("A", "B"): 30.0}, config,
    )
    return network, config


def _partly_covered() -> tuple:
    """Line L1 joins A and B; C sits a road link further on, away from every stop."""
    config = toy_config()
    network = grid_network(
        1, 4, 1.5, {"A": (0, 0), "B": (0, 2), "C": (0, 3)}, {"L1": [(0, 0), (0, 1), (0, 2)]},
        {("A", "B"): 20.0, ("A", "C"): 10.0}, config,
    )
    return network, config


# --- Baseline ---

def test_baseline_picks_the_affordable_frequency():
    network, config = _one_line(bus_budget=3.0)
    result = solve_baseline(network, config)
    assert result.summary.status == "optimal"
    assert result.design.frequencies == {"L1": 4.0}
    assert result.summary.buses_used == 2
    assert result.summary.vehicles_used == 0.0
    route = result.summary.routes[0]
    assert route.located and route.mean_headway_wait_min == pytest.approx(15.0)


def test_baseline_explains_an_unaffordable_network():
    network, config = _one_line(bus_budget=1.0)
    result = solve_baseline(network, config)
    assert result.summary.status == "infeasible"
    assert "needs 2 buses" in result.summary.explanation
    assert result.design is None
    assert [r.located for r in result.summary.routes] == [False]


def test_unreachable_demand_lowers_satisfaction():
    network, config = _partly_covered()
    result = solve_baseline(network, config)
    assert result.summary.satisfied_demand_pct == pytest.approx(66.67, abs=1e-2)
    assert result.summary.served_trips == pytest.approx(20.0)
    assert result.solution.unsatisfied == [("A", "C")]


def test_averages_reconcile_with_the_objective():
    network, config = _partly_covered()
    result = solve_integrated(network, config)
    summary = result.summary
    served = summary.served_trips
    assert summary.satisfied_demand_pct == pytest.approx(100.0)
    assert summary.in_vehicle_cost_min + summary.avg_wait_min * served == pytest.approx(summary.total_cost_min, rel=1e-9)
    assert summary.road_wait_min + summary.transit_wait_min == pytest.approx(summary.avg_wait_min * served, rel=1e-9)
    assert summary.avg_in_vehicle_min * served == pytest.approx(in_vehicle_minutes(network, result.solution), rel=1e-9)


def test_in_vehicle_average_excludes_fares_and_walking():
    network, config = _one_line(bus_budget=3.0)
    summary = solve_integrated(network, config).summary
    assert summary.avg_in_vehicle_min > 0
    assert summary.avg_in_vehicle_min * summary.served_trips < summary.in_vehicle_cost_min


# --- Comparison ---

def test_comparison_files_round_trip(tmp_path):
    network, config = _partly_covered()
    report = compare(solve_integrated(network, config).summary, solve_baseline(network, config).summary)
    frame = comparison_frame(report)
    assert list(frame.columns) == ["integrated", "baseline"]
    assert frame.loc["Satisfied demand (%)", "integrated"] >= frame.loc["Satisfied demand (%)", "baseline"]

    path = write_comparison(report, tmp_path / "cmp")
    again = ComparisonReport.model_validate_json(path.read_text(encoding="utf-8"))
    assert again == report
    for name in ("comparison.csv", "routes_integrated.csv", "routes_baseline.csv"):
        assert (tmp_path / "cmp" / name).is_file()


# --- Sensitivity grid ---

def test_more_budget_never_costs_more(tmp_path):
    network, config = toy_instance("corridor")
    grid = run_sensitivity(network, config, [2.0, 4.0, 8.0], [0.0, 20.0, 40.0])
    assert len(grid.cells) == 9
    assert all(c.status == "optimal" for c in grid.cells)
    for b_small, b_big in zip(grid.bus_budgets, grid.bus_budgets[1:]):
        for f in grid.fleet_budgets:
            assert grid.cell(b_big, f).total_hr <= grid.cell(b_small, f).total_hr * (1 + 1e-6)
    for b in grid.bus_budgets:
        for f_small, f_big in zip(grid.fleet_budgets, grid.fleet_budgets[1:]):
            assert grid.cell(b, f_big).total_hr <= grid.cell(b, f_small).total_hr * (1 + 1e-6)
    cell = grid.cell(8.0, 40.0)
    assert cell.ivt_hr + cell.road_wait_hr + cell.transit_wait_hr == pytest.approx(cell.total_hr, rel=1e-9)
    path = tmp_path / "grid.csv"
    write_grid(grid, path)
    assert path.read_text(encoding="utf-8").splitlines()[0].startswith("buses,vehicles,ivt_hr")


@pytest.mark.parametrize("method", ["analytic", "assignment"])
def test_wait_bounds_ignore_the_budgets(method):
    network, config = toy_instance("corridor")
    config = config.model_copy(update={"wait_bound_method": method})
    tight = config.model_copy(update={"bus_budget": 2.0, "fleet_budget": 0.0})
    assert estimate_wait_upper_bounds(network, config) == estimate_wait_upper_bounds(network, tight)


def test_grid_cell_matches_a_standalone_solve():
    network, config = toy_instance("corridor")
    grid = run_sensitivity(network, config, [4.0], [20.0])
    alone = run_enhanced(network, config.model_copy(update={"bus_budget": 4.0, "fleet_budget": 20.0}))
    assert grid.cell(4.0, 20.0).total_hr == pytest.approx(alone.upper_bound / 60.0, rel=1e-6)


def test_failing_cell_is_recorded():
    nodes = [
        Node("Z1", NodeKind.CENTROID, "Z1"), Node("Z2", NodeKind.CENTROID, "Z2"),
        Node("R1", NodeKind.ROAD, "Z1"), Node("R2", NodeKind.ROAD, "Z2"),
    ]
    links = [Link("a", "Z1", "R1", LinkKind.ACCESS, 1.0), Link("e", "R2", "Z2", LinkKind.EGRESS, 1.0)]
    network = MultimodalNetwork(nodes, links, demand=DemandMatrix({("Z1", "Z2"): 1.0}))
    grid = run_sensitivity(network, DesignConfig(), [10.0], [100.0])
    assert [c.status for c in grid.cells] == ["error"]
    assert grid.cells[0].error
    assert grid.cells[0].total_hr is None


def test_grid_needs_budgets():
    network, config = toy_instance("corridor")
    with pytest.raises(ValueError):
        run_sensitivity(network, config, [], [10.0])
    with pytest.raises(ValueError):
        run_sensitivity(network, config, [10.0], [])
