# tests/test_design_model.py
import numpy as np
import pytest

from modnet.assignment import estimate_wait_upper_bounds, evaluate_design
from modnet.design_model import (
    DesignDecision,
    DesignSpace,
    buses_required,
    build_design_milp,
    enumerate_feasible_designs,
    validate_mccormick_exactness,
)
from modnet.exceptions import ModelConstructionError
from modnet.network import LinkKind, TransitLine
from modnet.solver_kernel import Status, solve_milp
from modnet.synthetic import toy_config, toy_instance


def _forced(milp, bits):
    """Copy of the monolith with every design binary fixed to `bits`."""
    model = milp.model.copy()
    for col, b in zip(milp.design_cols, bits):
        model.lb[col] = model.ub[col] = float(b)
    return model


# --- Buses and menus ---

def test_buses_required_rounds_up():
    line = TransitLine("L", ("a", "b"), ("ab",), 30.0)
    assert buses_required(line, 12.0) == 12
    assert buses_required(TransitLine("S", ("a", "b"), ("ab",), 7.5), 12.0) == 3


def test_line_without_links_is_rejected():
    with pytest.raises(ModelConstructionError):
        buses_required(TransitLine("L", ("a",), (), 0.0), 6.0)


def test_encode_decode_round_trip(rng):
    network, config = toy_instance("triangle")
    space = DesignSpace(network, config)
    for _ in range(20):
        design = space.random_design(rng)
        bits = space.encode(design)
        assert space.decode(bits).key() == design.key()
        assert space.is_feasible(design)
        for line in space.lines:
            assert bits[space.x_index[line]] == sum(bits[space.y_index[(line, f)]] for f in space.thetas)


def test_off_menu_designs_are_reported():
    network, config = toy_instance("corridor")
    space = DesignSpace(network, config)
    with pytest.raises(ModelConstructionError):
        space.encode(DesignDecision({"L1": 5.0}, {}))
    problems = space.violations(DesignDecision({"L1": 5.0}, {"A": 7.0}))
    assert len(problems) == 2


def test_budget_violations():
    network, config = toy_instance("corridor")
    space = DesignSpace(network, config)
    assert space.violations(DesignDecision({}, {"A": 20.0, "B": 20.0})) == ["fleet budget exceeded: 40 > 30"]
    tight = DesignSpace(network, toy_config(bus_budget=3.0))
    assert tight.violations(DesignDecision({"L1": 12.0}, {})) == ["bus budget exceeded: 4 > 3"]


def test_sentinel_counts_no_vehicles():
    network, config = toy_instance("corridor")
    space = DesignSpace(network, config)
    assert space.vehicles_used(space.all_closed()) == 0.0
    assert space.vehicles_used(DesignDecision({}, {"A": 20.0})) == 20.0


@pytest.mark.parametrize("name, count", [("corridor", 27), ("triangle", 136), ("square", 88)])
def test_enumeration_counts(name, count):
    network, config = toy_instance(name)
    designs = list(enumerate_feasible_designs(DesignSpace(network, config)))
    assert len(designs) == count
    assert len({d.key() for d in designs}) == count


def test_forced_open_lines_restrict_enumeration():
    network, _ = toy_instance("corridor")
    space = DesignSpace(network, toy_config(force_all_lines_open=True))
    designs = list(enumerate_feasible_designs(space))
    assert len(designs) == 4 * 3
    assert all(d.is_open("L1") and d.is_open("L2") for d in designs)


# --- Monolith ---

def test_monolith_finds_enumerated_optimum(corridor_oracle):
    milp = build_design_milp(corridor_oracle.network, corridor_oracle.config, corridor_oracle.bounds,
                             space=corridor_oracle.space)
    result = solve_milp(milp.model)
    assert result.status == Status.OPTIMAL
    assert result.objective == pytest.approx(corridor_oracle.optimum, rel=1e-6)
    assert corridor_oracle.space.is_feasible(milp.decision(result.x))


def test_fixed_design_reproduces_assignment(corridor_oracle):
    oracle = corridor_oracle
    milp = build_design_milp(oracle.network, oracle.config, oracle.bounds, space=oracle.space)
    for design in oracle.designs[::4]:
        bits = oracle.space.encode(design)
        result = solve_milp(_forced(milp, bits))
        expected = evaluate_design(oracle.network, design, oracle.config).objective
        assert result.objective == pytest.approx(expected, rel=1e-6)
        report = validate_mccormick_exactness(milp.model, oracle.space, milp.blocks, result.x, bits)
        assert report.ok
        assert report.checked > 0


def test_corrupted_surrogate_is_flagged(corridor_oracle):
    oracle = corridor_oracle
    milp = build_design_milp(oracle.network, oracle.config, oracle.bounds, space=oracle.space)
    design = DesignDecision({"L1": 4.0}, {"A": 20.0})
    bits = oracle.space.encode(design)
    x = solve_milp(_forced(milp, bits)).x.copy()
    block = next(iter(milp.blocks.values()))
    col = next(iter(block.t.values()))
    x[col] += 5.0
    report = validate_mccormick_exactness(milp.model, oracle.space, milp.blocks, x, bits)
    assert not report.ok
    assert report.max_violation == pytest.approx(5.0)


def test_mccormick_audit_needs_integral_bits(corridor_oracle):
    oracle = corridor_oracle
    milp = build_design_milp(oracle.network, oracle.config, oracle.bounds, space=oracle.space)
    bits = np.full(oracle.space.size, 0.5)
    with pytest.raises(ModelConstructionError):
        validate_mccormick_exactness(milp.model, oracle.space, milp.blocks, np.zeros(milp.model.num_vars), bits)


def test_zero_bus_budget_closes_every_line():
    network, _ = toy_instance("corridor")
    config = toy_config(bus_budget=0.0)
    bounds = estimate_wait_upper_bounds(network, config)
    milp = build_design_milp(network, config, bounds)
    result = solve_milp(milp.model)
    assert result.status == Status.OPTIMAL
    assert milp.decision(result.x).frequencies == {}


def test_looser_wait_bounds_keep_the_optimum(corridor_oracle):
    oracle = corridor_oracle
    loose = {key: 10.0 * value for key, value in oracle.bounds.items()}
    milp = build_design_milp(oracle.network, oracle.config, loose, space=oracle.space)
    assert solve_milp(milp.model).objective == pytest.approx(oracle.optimum, rel=1e-6)


def test_missing_wait_bound_is_a_construction_error(corridor_oracle):
    oracle = corridor_oracle
    served = next(key for key in oracle.bounds if oracle.network.service_departures(key[0], LinkKind.TRANSIT))
    partial = {key: value for key, value in oracle.bounds.items() if key != served}
    with pytest.raises(ModelConstructionError):
        build_design_milp(oracle.network, oracle.config, partial, space=oracle.space)
