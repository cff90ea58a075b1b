# modnet/synthetic.py
"""
Synthetic instances: the two-zone illustrative network, small grid toys that
can be enumerated exhaustively, and a Sioux-Falls-shaped city with generated
candidate lines. All generators are deterministic for a given seed.
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .models import DesignConfig
from .network import (
    DemandMatrix,
    Link,
    LinkKind,
    MultimodalNetwork,
    Node,
    NodeKind,
    TransitLine,
    assign_fares,
    build_walking_links,
    write_network_dir,
)

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]


# --- Illustrative two-zone network ---

def sample_network(trips: float = 100.0) -> MultimodalNetwork:
    """
    Two zones, three lines and two MoD corridors.

    Z1 reaches stop 1 and road nodes R1, R4 on foot. Red runs 1->2->8, green
    1->4->9 and blue 2->8; MoD runs R1->R2->R3 and R4->R5->R6 with mode
    transfers R2->2 and R5->4. Stops 8, 9 and road nodes R3, R6 lead to Z2.
    No fares are attached.
    """
    z1, z2 = "Z1", "Z2"
    nodes = [
        Node("Z1", NodeKind.CENTROID, z1, 0.0, 0.0),
        Node("Z2", NodeKind.CENTROID, z2, 4.0, 0.0),
        Node("1", NodeKind.STOP, z1, 0.3, 0.0),
        Node("2", NodeKind.STOP, z1, 1.5, 0.4),
        Node("4", NodeKind.STOP, z1, 1.5, -0.4),
        Node("8", NodeKind.STOP, z2, 3.7, 0.2),
        Node("9", NodeKind.STOP, z2, 3.7, -0.2),
        Node("R1", NodeKind.ROAD, z1, 0.2, 0.6),
        Node("R2", NodeKind.ROAD, z1, 1.5, 0.8),
        Node("R3", NodeKind.ROAD, z2, 3.8, 0.6),
        Node("R4", NodeKind.ROAD, z1, 0.2, -0.6),
        Node("R5", NodeKind.ROAD, z1, 1.5, -0.8),
        Node("R6", NodeKind.ROAD, z2, 3.8, -0.6),
    ]
    rows = [
        ("1", "2", LinkKind.TRANSIT, 5.0, "red"), ("2", "8", LinkKind.TRANSIT, 7.0, "red"),
        ("1", "4", LinkKind.TRANSIT, 6.0, "green"), ("4", "9", LinkKind.TRANSIT, 8.0, "green"),
        ("2", "8", LinkKind.TRANSIT, 6.0, "blue"),
        ("R1", "R2", LinkKind.ROAD, 4.0, None), ("R2", "R3", LinkKind.ROAD, 5.0, None),
        ("R4", "R5", LinkKind.ROAD, 4.0, None), ("R5", "R6", LinkKind.ROAD, 6.0, None),
        ("Z1", "1", LinkKind.ACCESS, 2.0, None), ("Z1", "R1", LinkKind.ACCESS, 1.0, None),
        ("Z1", "R4", LinkKind.ACCESS, 1.0, None),
        ("R2", "2", LinkKind.MODE_TRANSFER, 1.0, None), ("R5", "4", LinkKind.MODE_TRANSFER, 1.0, None),
        ("8", "Z2", LinkKind.EGRESS, 2.0, None), ("9", "Z2", LinkKind.EGRESS, 3.0, None),
        ("R3", "Z2", LinkKind.EGRESS, 1.0, None), ("R6", "Z2", LinkKind.EGRESS, 1.0, None),
    ]
    links = [
        Link(f"{kind.value}:{t}->{h}" + (f"@{line}" if line else ""), t, h, kind, time, 0.0, line)
        for t, h, kind, time, line in rows
    ]
    lines = [
        TransitLine("red", ("1", "2", "8"), ("transit:1->2@red", "transit:2->8@red"), 12.0),
        TransitLine("green", ("1", "4", "9"), ("transit:1->4@green", "transit:4->9@green"), 14.0),
        TransitLine("blue", ("2", "8"), ("transit:2->8@blue",), 6.0),
    ]
    return MultimodalNetwork(nodes, links, lines, DemandMatrix({("Z1", "Z2"): trips}))


SAMPLE_FREQUENCIES = {"red": 10.0, "green": 30.0, "blue": 20.0}   # buses/hr: 1/6, 1/2, 1/3 per minute
SAMPLE_FLEETS = {"Z1": 100.0, "Z2": 50.0}


def hub_network(trips: float = 100.0, downstream_minutes: float = 10.0) -> MultimodalNetwork:
    """
    The illustrative origin collapsed onto one waiting node H.

    Red, green and a curbside MoD link all leave H with the same downstream
    cost, so all three are attractive and the split follows the rates.
    """
    nodes = [
        Node("Z1", NodeKind.CENTROID, "Z1", 0.0, 0.0),
        Node("Z2", NodeKind.CENTROID, "Z2", 4.0, 0.0),
        Node("H", NodeKind.STOP, "Z1", 0.2, 0.0),
        Node("A", NodeKind.STOP, "Z2", 3.8, 0.3),
        Node("B", NodeKind.STOP, "Z2", 3.8, -0.3),
        Node("C", NodeKind.ROAD, "Z2", 3.8, 0.0),
    ]
    links = [
        Link("acc:Z1->H", "Z1", "H", LinkKind.ACCESS, 1.0),
        Link("red:H->A", "H", "A", LinkKind.TRANSIT, downstream_minutes, 0.0, "red"),
        Link("green:H->B", "H", "B", LinkKind.TRANSIT, downstream_minutes, 0.0, "green"),
        Link("mod:H->C", "H", "C", LinkKind.ROAD, downstream_minutes),
        Link("egr:A->Z2", "A", "Z2", LinkKind.EGRESS, 1.0),
        Link("egr:B->Z2", "B", "Z2", LinkKind.EGRESS, 1.0),
        Link("egr:C->Z2", "C", "Z2", LinkKind.EGRESS, 1.0),
    ]
    lines = [
        TransitLine("red", ("H", "A"), ("red:H->A",), downstream_minutes),
        TransitLine("green", ("H", "B"), ("green:H->B",), downstream_minutes),
    ]
    return MultimodalNetwork(nodes, links, lines, DemandMatrix({("Z1", "Z2"): trips}))


# --- Grid instances ---

def grid_network(
    rows: int,
    cols: int,
    spacing: float,
    centroids: Mapping[str, Cell],
    lines: Mapping[str, Sequence[Cell]],
    demand: Mapping[Tuple[str, str], float],
    config: DesignConfig,
    road_speed_mph: float = 25.0,
    transit_speed_mph: float = 18.0,
) -> MultimodalNetwork:
    """
    A rows x cols road grid with centroids and two-way lines placed on cells.

    Each line has its own stop per cell, offset from the road node by less
    than the walking radius so that access, egress, mode transfers and
    transfers between lines at a shared cell all exist. Walking links and
    fares are generated from `config`.
    """
    nodes: List[Node] = []
    links: List[Link] = []

    def road_id(cell: Cell) -> str:
        return f"R{cell[0]}_{cell[1]}"

    centroid_xy = {z: (c * spacing + 0.1, r * spacing + 0.1) for z, (r, c) in centroids.items()}

    def zone_at(x: float, y: float) -> str:
        return min(centroid_xy, key=lambda z: (math.hypot(centroid_xy[z][0] - x, centroid_xy[z][1] - y), z))

    for z, (x, y) in centroid_xy.items():
        nodes.append(Node(z, NodeKind.CENTROID, z, x, y))
    for r in range(rows):
        for c in range(cols):
            x, y = c * spacing, r * spacing
            nodes.append(Node(road_id((r, c)), NodeKind.ROAD, zone_at(x, y), x, y))

    def road_minutes(a: Cell, b: Cell, speed: float) -> float:
        distance = spacing * (abs(a[0] - b[0]) + abs(a[1] - b[1]))
        return distance / speed * 60.0

    for r in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0)):
                nr, nc = r + dr, c + dc
                if nr < rows and nc < cols:
                    t = road_minutes((r, c), (nr, nc), road_speed_mph)
                    a, b = road_id((r, c)), road_id((nr, nc))
                    links.append(Link(f"road:{a}->{b}", a, b, LinkKind.ROAD, t))
                    links.append(Link(f"road:{b}->{a}", b, a, LinkKind.ROAD, t))

    transit_lines: List[TransitLine] = []
    for idx, (line_id, cells) in enumerate(sorted(lines.items())):
        stops = []
        for r, c in cells:
            sid = f"{line_id}:{r}_{c}"
            x, y = c * spacing + 0.05 + 0.02 * idx, r * spacing - 0.05
            nodes.append(Node(sid, NodeKind.STOP, zone_at(x, y), x, y))
            stops.append(sid)
        forward: List[str] = []
        total = 0.0
        for (a, ca), (b, cb) in zip(zip(stops, cells), zip(stops[1:], cells[1:])):
            t = road_minutes(ca, cb, transit_speed_mph)
            links.append(Link(f"transit:{a}->{b}", a, b, LinkKind.TRANSIT, t, 0.0, line_id))
            links.append(Link(f"transit:{b}->{a}", b, a, LinkKind.TRANSIT, t, 0.0, line_id))
            forward.append(f"transit:{a}->{b}")
            total += t
        transit_lines.append(TransitLine(line_id, tuple(stops), tuple(forward), total, candidate=True))

    network = MultimodalNetwork(nodes, links, transit_lines, DemandMatrix(dict(demand)))
    network = build_walking_links(network, config.walk_radius, config.walk_speed_mph)
    return assign_fares(network, config.transit_fare, config.mod_base_fare, config.mod_fare_per_minute)


def toy_config(**overrides: object) -> DesignConfig:
    """Small menus and a fast matching queue so full enumeration stays cheap."""
    base: Dict[str, object] = dict(
        theta_per_hour=[4.0, 12.0], omega=[0.01, 20.0], bus_budget=8.0, fleet_budget=30.0,
        matching_coefficient=0.05,
    )
    base.update(overrides)
    return DesignConfig(**base)


def toy_instance(name: str) -> Tuple[MultimodalNetwork, DesignConfig]:
    """
    Named toys for the enumeration oracles:

        corridor  1x3 grid, 2 zones, local and express line.
        triangle  2x2 grid, 3 zones, two lines, three fleet levels.
        square    2x3 grid, 4 zones, three lines at one frequency.
    """
    if name == "corridor":
        config = toy_config()
        network = grid_network(
            1, 3, 1.5, {"A": (0, 0), "B": (0, 2)},
            {"L1": [(0, 0), (0, 1), (0, 2)], "L2": [(0, 0), (0, 2)]},
            {("A", "B"): 30.0, ("B", "A"): 20.0}, config,
        )
    elif name == "triangle":
        config = toy_config(omega=[0.01, 20.0, 40.0], fleet_budget=60.0, bus_budget=6.0)
        network = grid_network(
            2, 2, 1.2, {"A": (0, 0), "B": (0, 1), "C": (1, 1)},
            {"L1": [(0, 0), (0, 1), (1, 1)], "L2": [(0, 0), (1, 0), (1, 1)]},
            {("A", "B"): 15.0, ("A", "C"): 25.0, ("B", "C"): 10.0, ("C", "A"): 20.0}, config,
        )
    elif name == "square":
        config = toy_config(theta_per_hour=[6.0], bus_budget=8.0, fleet_budget=40.0)
        network = grid_network(
            2, 3, 1.2, {"A": (0, 0), "B": (0, 2), "C": (1, 0), "D": (1, 2)},
            {"L1": [(0, 0), (0, 1), (0, 2)], "L2": [(1, 0), (1, 1), (1, 2)], "L3": [(0, 1), (1, 1)]},
            {("A", "B"): 20.0, ("C", "D"): 20.0, ("A", "D"): 10.0, ("D", "A"): 10.0}, config,
        )
    else:
        raise ValueError(f"Unknown toy instance '{name}'")
    logger.debug(f"Built toy '{name}': {network!r}")
    return network, config


TOY_NAMES = ("corridor", "triangle", "square")


# --- Sioux-Falls-shaped city ---

SIOUX_FALLS_COORDS: Dict[int, Tuple[float, float]] = {
    1: (50000, 510000), 2: (320000, 510000), 3: (50000, 440000), 4: (130000, 440000),
    5: (220000, 440000), 6: (320000, 440000), 7: (420000, 380000), 8: (320000, 380000),
    9: (220000, 380000), 10: (220000, 320000), 11: (130000, 320000), 12: (50000, 320000),
    13: (50000, 50000), 14: (130000, 190000), 15: (220000, 190000), 16: (320000, 320000),
    17: (320000, 260000), 18: (420000, 320000), 19: (320000, 190000), 20: (320000, 50000),
    21: (220000, 50000), 22: (220000, 130000), 23: (130000, 130000), 24: (130000, 50000),
}
SIOUX_FALLS_EDGES: Tuple[Tuple[int, int], ...] = (
    (1, 2), (1, 3), (2, 6), (3, 4), (3, 12), (4, 5), (4, 11), (5, 6), (5, 9), (6, 8),
    (7, 8), (7, 18), (8, 9), (8, 16), (9, 10), (10, 11), (10, 15), (10, 16), (10, 17), (11, 12),
    (11, 14), (12, 13), (13, 24), (14, 15), (14, 23), (15, 19), (15, 22), (16, 17), (16, 18), (17, 19),
    (18, 20), (19, 20), (20, 21), (20, 22), (21, 22), (21, 24), (22, 23), (23, 24),
)
SIOUX_FALLS_LINE_ENDS: Tuple[Tuple[int, int], ...] = (
    (1, 20), (2, 13), (3, 24), (7, 21), (12, 18), (13, 7), (14, 6), (15, 1), (16, 24), (19, 3), (22, 2), (23, 8),
)
COORD_SCALE = 40000.0   # coordinate units per mile


def sioux_falls_network(
    config: Optional[DesignConfig] = None,
    num_lines: int = 12,
    segments: int = 1,
    demand_scale: float = 1.0,
    destinations: Optional[Sequence[int]] = None,
    seed: int = 0,
    road_speed_mph: float = 25.0,
    transit_speed_mph: float = 18.0,
) -> MultimodalNetwork:
    """
    Road graph with 24 intersections and 76 directed links (each edge split
    into `segments` pieces), one centroid per intersection, and up to 12
    candidate lines routed along shortest road paths between fixed terminals.

    Args:
        destinations: Intersections receiving demand (all 24 by default).
        demand_scale: Multiplier on the seeded gravity-style demand.
    """
    config = config or DesignConfig()
    rng = np.random.default_rng(seed)
    xy = {n: (x / COORD_SCALE, y / COORD_SCALE) for n, (x, y) in SIOUX_FALLS_COORDS.items()}
    nodes: List[Node] = []
    links: List[Link] = []
    zone = {n: f"Z{n}" for n in xy}

    for n, (x, y) in xy.items():
        nodes.append(Node(f"Z{n}", NodeKind.CENTROID, zone[n], x + 0.1, y + 0.1))
        nodes.append(Node(f"R{n}", NodeKind.ROAD, zone[n], x, y))

    road_graph = nx.DiGraph()
    for a, b in SIOUX_FALLS_EDGES:
        (xa, ya), (xb, yb) = xy[a], xy[b]
        chain = [f"R{a}"]
        for s in range(1, segments):
            frac = s / segments
            mid = f"R{a}_{b}_{s}"
            near = a if frac <= 0.5 else b
            nodes.append(Node(mid, NodeKind.ROAD, zone[near], xa + (xb - xa) * frac, ya + (yb - ya) * frac))
            chain.append(mid)
        chain.append(f"R{b}")
        piece = math.hypot(xb - xa, yb - ya) / segments / road_speed_mph * 60.0
        for u, v in zip(chain[:-1], chain[1:]):
            links.append(Link(f"road:{u}->{v}", u, v, LinkKind.ROAD, piece))
            links.append(Link(f"road:{v}->{u}", v, u, LinkKind.ROAD, piece))
        weight = math.hypot(xb - xa, yb - ya)
        road_graph.add_edge(a, b, weight=weight)
        road_graph.add_edge(b, a, weight=weight)

    lines: List[TransitLine] = []
    for idx, (start, end) in enumerate(SIOUX_FALLS_LINE_ENDS[:num_lines]):
        line_id = f"L{idx + 1:02d}"
        path = nx.shortest_path(road_graph, start, end, weight="weight")
        stops: List[str] = []
        for n in path:
            sid = f"{line_id}:{n}"
            x, y = xy[n]
            nodes.append(Node(sid, NodeKind.STOP, zone[n], x + 0.03 + 0.01 * idx, y - 0.05))
            stops.append(sid)
        forward: List[str] = []
        total = 0.0
        for (a, na), (b, nb) in zip(zip(stops, path), zip(stops[1:], path[1:])):
            t = road_graph.edges[na, nb]["weight"] / transit_speed_mph * 60.0
            links.append(Link(f"transit:{a}->{b}", a, b, LinkKind.TRANSIT, t, 0.0, line_id))
            links.append(Link(f"transit:{b}->{a}", b, a, LinkKind.TRANSIT, t, 0.0, line_id))
            forward.append(f"transit:{a}->{b}")
            total += t
        lines.append(TransitLine(line_id, tuple(stops), tuple(forward), total, candidate=True))

    targets = set(destinations) if destinations is not None else set(xy)
    entries: Dict[Tuple[str, str], float] = {}
    for o in sorted(xy):
        for d in sorted(xy):
            if o == d or d not in targets:
                continue
            distance = math.hypot(xy[o][0] - xy[d][0], xy[o][1] - xy[d][1])
            trips = demand_scale * float(rng.uniform(5.0, 25.0)) / (1.0 + distance / 4.0)
            entries[(f"Z{o}", f"Z{d}")] = round(trips, 2)

    network = MultimodalNetwork(nodes, links, lines, DemandMatrix(entries))
    network = build_walking_links(network, config.walk_radius, config.walk_speed_mph)
    network = assign_fares(network, config.transit_fare, config.mod_base_fare, config.mod_fare_per_minute)
    logger.info(f"Built Sioux-Falls-shaped network {network!r} (segments={segments}, seed={seed}).")
    return network


def mid_size_instance(seed: int = 0) -> Tuple[MultimodalNetwork, DesignConfig]:
    """24 zones, 12 candidate lines, edges split in three; demand towards eight destinations."""
    config = DesignConfig(matching_coefficient=0.02, bus_budget=70.0, fleet_budget=3000.0)
    network = sioux_falls_network(
        config, num_lines=12, segments=3, destinations=(1, 4, 7, 10, 13, 16, 20, 23), seed=seed,
    )
    return network, config


# --- Export ---

def write_instance(
    network: MultimodalNetwork, directory: Union[str, Path], config: Optional[DesignConfig] = None
) -> Path:
    """Write the network CSVs and, when given, a config.json with a [design] section."""
    base = Path(directory)
    write_network_dir(network, base)
    if config is not None:
        payload = {"design": config.model_dump(mode="json")}
        (base / "config.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info(f"Wrote instance to {base}.")
    return base
