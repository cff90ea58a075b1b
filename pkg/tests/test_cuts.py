# tests/test_cuts.py
import itertools

import pytest

from modnet.cuts import (
    CutPool,
    OptimalityCut,
    StaticCut,
    is_minimal_cover,
    make_clique_cuts,
    make_cover_cuts,
    sum_cuts,
)
from modnet.design_model import DesignSpace
from modnet.models import DesignConfig
from modnet.network import Link, LinkKind, MultimodalNetwork, Node, NodeKind, TransitLine
from modnet.synthetic import toy_config, toy_instance


def _three_line_space(bus_budget: float) -> DesignSpace:
    """Three lines needing 2, 3 and 4 buses at the single 60/hr frequency."""
    nodes, links, lines = [], [], []
    for name, minutes in (("a", 1.0), ("b", 1.5), ("c", 2.0)):
        nodes += [Node(f"{name}0", NodeKind.STOP, "Z"), Node(f"{name}1", NodeKind.STOP, "Z")]
        links.append(Link(name, f"{name}0", f"{name}1", LinkKind.TRANSIT, minutes, 0.0, name))
        lines.append(TransitLine(name, (f"{name}0", f"{name}1"), (name,), minutes))
    config = DesignConfig(theta_per_hour=[60.0], bus_budget=bus_budget)
    return DesignSpace(MultimodalNetwork(nodes, links, lines), config)


# --- Clique cuts ---

@pytest.mark.parametrize("name, rhs", [("corridor", 1.0), ("square", 2.0)])
def test_clique_caps_zones_at_the_fleet_level(name, rhs):
    network, config = toy_instance(name)
    space = DesignSpace(network, config)
    cuts = make_clique_cuts(space)
    assert [c.rhs for c in cuts] == [rhs]
    assert set(cuts[0].members) == {space.n_index[(z, 20.0)] for z in space.zones}


def test_redundant_clique_is_skipped():
    network, config = toy_instance("triangle")
    cuts = make_clique_cuts(DesignSpace(network, config))
    assert [(c.label, c.rhs) for c in cuts] == [("clique[40]", 1.0)]


def test_clique_cuts_on_the_city(sioux_falls):
    cuts = make_clique_cuts(DesignSpace(sioux_falls, DesignConfig()))
    assert {c.label: c.rhs for c in cuts} == {"clique[200]": 15.0, "clique[500]": 6.0}


def test_zero_fleet_budget_forbids_every_level():
    network, _ = toy_instance("corridor")
    cuts = make_clique_cuts(DesignSpace(network, toy_config(fleet_budget=0.0)))
    assert [c.rhs for c in cuts] == [0.0]


# --- Cover cuts ---

def test_cover_on_triangle_is_minimal():
    network, config = toy_instance("triangle")
    space = DesignSpace(network, config)
    cuts = make_cover_cuts(space)
    assert len(cuts) == 1
    cut = cuts[0]
    assert set(cut.members) == {space.y_index[("L1", 12.0)], space.y_index[("L2", 12.0)]}
    assert cut.rhs == 1.0
    assert is_minimal_cover(space, cut)


def test_greedy_cover_may_be_non_minimal_but_stays_valid():
    space = _three_line_space(5.0)
    assert [space.bus_cost[(l, 60.0)] for l in space.lines] == [2, 3, 4]
    cuts = make_cover_cuts(space)
    assert len(cuts) == 1
    assert cuts[0].rhs == 2.0
    assert not is_minimal_cover(space, cuts[0])
    for choice in itertools.product([0, 1], repeat=3):
        cost = sum(c * b for c, b in zip([2, 3, 4], choice))
        if cost <= 5:
            bits = [0.0] * space.size
            for line, b in zip(space.lines, choice):
                bits[space.y_index[(line, 60.0)]] = float(b)
            assert cuts[0].holds(bits)


def test_generous_budget_has_no_covers():
    assert make_cover_cuts(_three_line_space(100.0)) == []


def test_static_cuts_hold_on_every_feasible_design(toy_oracle):
    space = toy_oracle.space
    cuts = make_clique_cuts(space) + make_cover_cuts(space)
    for design in toy_oracle.designs:
        bits = space.encode(design)
        assert all(cut.holds(bits) for cut in cuts)


# --- Pool ---

def _cut(constant: float, scope="A") -> OptimalityCut:
    return OptimalityCut(scope, constant, {0: 1.0, 3: -2.5})


def test_pool_rejects_duplicates():
    pool = CutPool()
    assert pool.add(_cut(1.0))
    assert not pool.add(_cut(1.0))
    assert pool.add(_cut(1.0, scope="B"))
    assert len(pool) == 2
    assert pool.stats.duplicates == 1


def test_cleanup_archives_and_restores():
    pool = CutPool()
    keep, drop = _cut(1.0), _cut(2.0)
    pool.add(keep)
    pool.add(drop)
    for _ in range(3):
        pool.record_duals({keep.key(): 0.7})
    assert pool.cleanup(after=3, protected=set()) == [drop]
    assert len(pool) == 1
    assert drop.key() in pool.archive
    assert pool.add(_cut(2.0))
    assert pool.stats.restored == 1
    assert pool.stats.generated == 2


def test_cleanup_spares_protected_cuts():
    pool = CutPool()
    cut = _cut(1.0)
    pool.add(cut)
    pool.record_duals({})
    assert pool.cleanup(after=1, protected={cut.key()}) == []
    assert len(pool) == 1


def test_restored_cut_is_never_archived_again():
    pool = CutPool()
    cut = _cut(2.0)
    pool.add(cut)
    pool.record_duals({})
    assert pool.cleanup(after=1, protected=set()) == [cut]
    assert pool.add(_cut(2.0))
    for _ in range(10):
        pool.record_duals({})
        assert pool.cleanup(after=1, protected=set()) == []
    assert cut.key() in pool.active
    assert pool.stats.removed == 1


def test_nonzero_dual_resets_the_streak():
    pool = CutPool()
    cut = _cut(1.0)
    pool.add(cut)
    pool.record_duals({})
    pool.record_duals({cut.key(): -0.3})
    pool.record_duals({})
    assert pool.cleanup(after=2, protected=set()) == []


def test_sum_cuts_adds_coefficients():
    total = sum_cuts([_cut(1.0), OptimalityCut("B", 2.0, {3: 1.0, 5: 4.0})])
    assert total.scope is None
    assert total.constant == 3.0
    assert total.coefs == {0: 1.0, 3: -1.5, 5: 4.0}
    assert total.rhs([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]) == pytest.approx(3.0 + 1.0 - 1.5 + 4.0)


def test_static_cut_holds_with_tolerance():
    cut = StaticCut("clique", (0, 1), 1.0, "c")
    assert cut.holds([1.0, 0.0])
    assert not cut.holds([1.0, 1.0])
