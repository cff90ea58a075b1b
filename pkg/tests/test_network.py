# tests/test_network.py
import math

import numpy as np
import pandas as pd
import pytest

from modnet.exceptions import NetworkDataError
from modnet.network import (
    DemandMatrix,
    Link,
    LinkKind,
    MultimodalNetwork,
    Node,
    NodeKind,
    TransitLine,
    build_walking_links,
    check_road_connected,
    link_cost,
    load_network,
    load_network_dir,
    transit_only_view,
    write_network_dir,
)
from modnet.synthetic import toy_instance


def _write_tables(base, nodes, links, demand, lines=None):
    base.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(nodes).to_csv(base / "nodes.csv", index=False)
    pd.DataFrame(links).to_csv(base / "links.csv", index=False)
    pd.DataFrame(demand).to_csv(base / "demand.csv", index=False)
    if lines is not None:
        pd.DataFrame(lines).to_csv(base / "lines.csv", index=False)
    return base


def _small_tables():
    nodes = [
        {"nodeId": "Z1", "x": 0.0, "y": 0.0, "kind": "centroid", "zone": "Z1"},
        {"nodeId": "S1", "x": 0.2, "y": 0.0, "kind": "stop", "zone": "Z1"},
        {"nodeId": "S2", "x": 2.0, "y": 0.0, "kind": "stop", "zone": "Z2"},
        {"nodeId": "Z2", "x": 2.2, "y": 0.0, "kind": "centroid", "zone": "Z2"},
    ]
    links = [
        {"fromNodeId": "Z1", "toNodeId": "S1", "kind": "access", "travelTime": 4.0, "lineId": ""},
        {"fromNodeId": "S1", "toNodeId": "S2", "kind": "transit", "travelTime": 6.0, "lineId": "A"},
        {"fromNodeId": "S2", "toNodeId": "Z2", "kind": "egress", "travelTime": 4.0, "lineId": ""},
    ]
    demand = [{"origin": "Z1", "destination": "Z2", "trips": 12.0}]
    return nodes, links, demand


# --- Costs ---

def test_link_cost_examples():
    assert link_cost(Link("a", "i", "j", LinkKind.ROAD, 10.0), 23.0) == pytest.approx(10.0)
    assert link_cost(Link("b", "i", "j", LinkKind.TRANSIT, 0.0, 2.0, "L"), 23.0) == pytest.approx(5.2174, abs=1e-4)
    mod = Link("c", "i", "j", LinkKind.ROAD, 5.0, 0.21 * 5 + 0.8)
    assert link_cost(mod, 23.0) == pytest.approx(9.826, abs=1e-3)


def test_link_cost_rejects_nonpositive_value_of_time():
    with pytest.raises(ValueError):
        link_cost(Link("a", "i", "j", LinkKind.ROAD, 1.0), 0.0)


def test_fares_attach_to_boardings_only():
    network, config = toy_instance("corridor")
    for link in network.links:
        if link.kind == LinkKind.TRANSIT:
            expected = config.transit_fare if link.tail in network.waiting_nodes else 0.0
            assert link.fare == pytest.approx(expected)
        elif link.kind == LinkKind.ROAD:
            base = config.mod_base_fare if link.tail in network.waiting_nodes else 0.0
            assert link.fare == pytest.approx(base + config.mod_fare_per_minute * link.travel_time)
        else:
            assert link.fare == 0.0


# --- Loading ---

def test_load_small_network(tmp_path):
    base = _write_tables(tmp_path / "net", *_small_tables())
    network = load_network_dir(base)
    assert len(network.node_ids) == 4
    assert len(network.links) == 3
    assert network.lines["A"].stops == ("S1", "S2")
    assert network.lines["A"].one_way_time == pytest.approx(6.0)
    assert network.demand.total == pytest.approx(12.0)
    s1 = network.node_index["S1"]
    assert len(network.fs("S1")) == 1 and len(network.bs("S1")) == 1
    assert network.links[network.fs("S1")[0]].head == "S2"
    assert s1 == 1
    assert network.waiting_nodes == frozenset({"S1"})


def test_link_to_missing_node_names_file_and_row(tmp_path):
    nodes, links, demand = _small_tables()
    links.append({"fromNodeId": "S2", "toNodeId": "NOPE", "kind": "road", "travelTime": 1.0, "lineId": ""})
    base = _write_tables(tmp_path / "net", nodes, links, demand)
    with pytest.raises(NetworkDataError) as err:
        load_network_dir(base)
    assert err.value.row == 5
    assert err.value.file.endswith("links.csv")
    assert err.value.exit_code == 2


def test_negative_travel_time_rejected(tmp_path):
    nodes, links, demand = _small_tables()
    links[1]["travelTime"] = -1.0
    with pytest.raises(NetworkDataError) as err:
        load_network_dir(_write_tables(tmp_path / "net", nodes, links, demand))
    assert err.value.row == 3


def test_duplicate_link_rejected(tmp_path):
    nodes, links, demand = _small_tables()
    links.append(dict(links[1]))
    with pytest.raises(NetworkDataError):
        load_network_dir(_write_tables(tmp_path / "net", nodes, links, demand))


def test_demand_must_join_centroids(tmp_path):
    nodes, links, _ = _small_tables()
    demand = [{"origin": "Z1", "destination": "S2", "trips": 1.0}]
    with pytest.raises(NetworkDataError) as err:
        load_network_dir(_write_tables(tmp_path / "net", nodes, links, demand))
    assert err.value.file.endswith("demand.csv")


def test_missing_demand_file_is_named(tmp_path):
    base = _write_tables(tmp_path / "net", *_small_tables())
    (base / "demand.csv").unlink()
    with pytest.raises(NetworkDataError) as err:
        load_network_dir(base)
    assert "demand.csv" in str(err.value)


def test_nodes_without_zone_join_nearest_centroid():
    nodes = pd.DataFrame([
        {"nodeId": "Z1", "x": 0.0, "y": 0.0, "kind": "centroid"},
        {"nodeId": "Z2", "x": 5.0, "y": 0.0, "kind": "centroid"},
        {"nodeId": "R", "x": 4.0, "y": 0.0, "kind": "road"},
    ])
    links = pd.DataFrame([{"fromNodeId": "Z1", "toNodeId": "R", "kind": "access", "travelTime": 1.0}])
    network = load_network(nodes, links)
    assert network.zone_of("R") == "Z2"
    assert network.zone_of("Z1") == "Z1"


def test_written_toy_loads_back(tmp_path):
    network, _ = toy_instance("triangle")
    write_network_dir(network, tmp_path / "tri")
    again = load_network_dir(tmp_path / "tri")
    assert again.summary() == network.summary()
    assert again.lines["L1"].stops == network.lines["L1"].stops
    assert again.demand.entries == network.demand.entries


# --- Walking links ---

def _two_line_network(second_line: str) -> MultimodalNetwork:
    nodes = [
        Node("S1", NodeKind.STOP, "Z", 0.0, 0.0),
        Node("S2", NodeKind.STOP, "Z", 0.4, 0.0),
        Node("T1", NodeKind.STOP, "Z", 10.0, 0.0),
        Node("T2", NodeKind.STOP, "Z", 10.0, 5.0),
    ]
    links = [
        Link("a1", "S1", "T1", LinkKind.TRANSIT, 30.0, 0.0, "a"),
        Link("b1", "S2", "T2", LinkKind.TRANSIT, 30.0, 0.0, second_line),
    ]
    lines = [TransitLine("a", ("S1", "T1"), ("a1",), 30.0)]
    if second_line != "a":
        lines.append(TransitLine(second_line, ("S2", "T2"), ("b1",), 30.0))
    else:
        lines = [TransitLine("a", ("S1", "T1", "S2", "T2"), ("a1", "b1"), 60.0)]
    return MultimodalNetwork(nodes, links, lines)


def test_transfer_links_between_different_lines():
    network = build_walking_links(_two_line_network("b"), walk_radius=0.5)
    transfers = {(l.tail, l.head) for l in network.links if l.kind == LinkKind.TRANSIT_TRANSFER}
    assert transfers == {("S1", "S2"), ("S2", "S1")}


def test_no_transfer_within_one_line():
    network = build_walking_links(_two_line_network("a"), walk_radius=0.5)
    assert not network.links_of_kind(LinkKind.TRANSIT_TRANSFER)


def test_access_and_egress_within_radius():
    nodes = [
        Node("Z", NodeKind.CENTROID, "Z", 0.0, 0.0),
        Node("S", NodeKind.STOP, "Z", 0.3, 0.0),
        Node("T", NodeKind.STOP, "Z", 5.0, 5.0),
        Node("R", NodeKind.ROAD, "Z", 0.0, 0.45),
        Node("Rfar", NodeKind.ROAD, "Z", 3.0, 3.0),
    ]
    links = [Link("s", "S", "T", LinkKind.TRANSIT, 20.0, 0.0, "a"), Link("r", "R", "Rfar", LinkKind.ROAD, 9.0)]
    network = build_walking_links(
        MultimodalNetwork(nodes, links, [TransitLine("a", ("S", "T"), ("s",), 20.0)]), walk_radius=0.5
    )
    access = {l.head: l for l in network.links if l.kind == LinkKind.ACCESS}
    egress = {l.tail for l in network.links if l.kind == LinkKind.EGRESS}
    assert set(access) == {"S", "R"}
    assert egress == {"S", "R"}
    assert access["S"].travel_time == pytest.approx(6.0)
    assert network.waiting_nodes == frozenset({"S", "R"})


def test_distance_overrides_decide_walkability():
    nodes = [
        Node("Z", NodeKind.CENTROID, "Z", 0.0, 0.0),
        Node("Near", NodeKind.STOP, "Z", 0.1, 0.0),
        Node("Far", NodeKind.STOP, "Z", 9.0, 9.0),
    ]
    links = [Link("s", "Near", "Far", LinkKind.TRANSIT, 20.0, 0.0, "a")]
    lines = [TransitLine("a", ("Near", "Far"), ("s",), 20.0)]
    distances = {("Z", "Near"): 2.0, ("Far", "Z"): 0.25}
    network = build_walking_links(MultimodalNetwork(nodes, links, lines, distances=distances), walk_radius=0.5)
    access = {l.head: l for l in network.links if l.kind == LinkKind.ACCESS}
    assert set(access) == {"Far"}
    assert access["Far"].travel_time == pytest.approx(5.0)


def test_radius_query_matches_a_pairwise_scan():
    rng = np.random.default_rng(3)
    nodes = [Node(f"Z{i}", NodeKind.CENTROID, f"Z{i}", *rng.uniform(0, 4, 2)) for i in range(6)]
    nodes += [Node(f"S{i}", NodeKind.STOP, "Z0", *rng.uniform(0, 4, 2)) for i in range(40)]
    nodes += [Node(f"R{i}", NodeKind.ROAD, "Z0", *rng.uniform(0, 4, 2)) for i in range(40)]
    lines, links = [], []
    for i in range(0, 40, 2):
        links.append(Link(f"t{i}", f"S{i}", f"S{i + 1}", LinkKind.TRANSIT, 5.0, 0.0, f"L{i}"))
        lines.append(TransitLine(f"L{i}", (f"S{i}", f"S{i + 1}"), (f"t{i}",), 5.0))
    network = build_walking_links(MultimodalNetwork(nodes, links, lines), walk_radius=0.6)
    expected = set()
    for a in nodes:
        for b in nodes:
            if a.id == b.id or math.hypot(a.x - b.x, a.y - b.y) > 0.6:
                continue
            if a.kind == NodeKind.CENTROID and b.kind != NodeKind.CENTROID:
                expected |= {(a.id, b.id), (b.id, a.id)}
            elif {a.kind, b.kind} == {NodeKind.ROAD, NodeKind.STOP}:
                expected.add((a.id, b.id))
            elif a.kind == b.kind == NodeKind.STOP and int(a.id[1:]) // 2 != int(b.id[1:]) // 2:
                expected.add((a.id, b.id))
    walking = {(l.tail, l.head) for l in network.links if l.is_walking}
    assert walking == expected


def test_walking_links_are_idempotent():
    once = build_walking_links(_two_line_network("b"), walk_radius=0.5)
    twice = build_walking_links(once, walk_radius=0.5)
    assert [l.id for l in once.links] == [l.id for l in twice.links]


def test_walking_radius_must_be_positive():
    with pytest.raises(ValueError):
        build_walking_links(_two_line_network("b"), walk_radius=0.0)


# --- Connectivity and demand ---

def test_toys_are_road_connected():
    for name in ("corridor", "triangle", "square"):
        network, _ = toy_instance(name)
        assert check_road_connected(network)


def test_disconnected_road_layer_detected():
    nodes = [
        Node("Z1", NodeKind.CENTROID, "Z1", 0, 0), Node("Z2", NodeKind.CENTROID, "Z2", 9, 0),
        Node("R1", NodeKind.ROAD, "Z1", 0, 0.1), Node("R2", NodeKind.ROAD, "Z2", 9, 0.1),
    ]
    links = [
        Link("acc", "Z1", "R1", LinkKind.ACCESS, 1.0), Link("egr", "R2", "Z2", LinkKind.EGRESS, 1.0),
    ]
    network = MultimodalNetwork(nodes, links, demand=DemandMatrix({("Z1", "Z2"): 5.0}))
    assert not check_road_connected(network)
    assert network.unreachable_pairs() == [("Z1", "Z2")]
    assert network.served_demand().total == 0.0


def test_g_columns_sum_to_zero():
    network, _ = toy_instance("triangle")
    for k in network.demand.destinations:
        g = network.g_vector(k)
        assert g.sum() == pytest.approx(0.0)
        assert g[network.node_index[k]] == pytest.approx(-sum(network.demand.to_destination(k).values()))


def test_transit_only_view_drops_road_layer():
    network, _ = toy_instance("corridor")
    view = transit_only_view(network)
    roads = set(view.nodes_of_kind(NodeKind.ROAD))
    assert not view.links_of_kind(LinkKind.ROAD, LinkKind.MODE_TRANSFER)
    assert all(l.tail not in roads and l.head not in roads for l in view.links)
    assert len(view.links_of_kind(LinkKind.TRANSIT)) == len(network.links_of_kind(LinkKind.TRANSIT))


def test_sioux_falls_shape(sioux_falls):
    assert len(sioux_falls.nodes_of_kind(NodeKind.ROAD)) == 24
    assert len(sioux_falls.links_of_kind(LinkKind.ROAD)) == 76
    assert len(sioux_falls.lines) == 12
    assert len(sioux_falls.zones) == 24
    assert check_road_connected(sioux_falls)


def test_sioux_falls_demand_is_seeded():
    from modnet.synthetic import sioux_falls_network

    a = sioux_falls_network(seed=3).demand.entries
    b = sioux_falls_network(seed=3).demand.entries
    c = sioux_falls_network(seed=4).demand.entries
    assert a == b
    assert a != c
    assert np.all(np.array(list(a.values())) > 0)
