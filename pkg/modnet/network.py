# modnet/network.py
"""
Multimodal network: road, transit and walking layers over a single digraph.

The network is built once (from CSV tables or in-memory rows), validated, and
then treated as immutable. Helpers that "change" a network (walking-link
generation, fare assignment, the transit-only view used by the baseline)
return a new MultimodalNetwork.

Units: coordinates and ζ share one distance unit (miles by default), travel
times are minutes, fares are dollars and value of time is $/hr.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from scipy.spatial import KDTree

from .exceptions import NetworkDataError

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    ROAD = "road"
    STOP = "stop"
    CENTROID = "centroid"


class LinkKind(str, Enum):
    TRANSIT = "transit"
    ROAD = "road"
    ACCESS = "access"
    EGRESS = "egress"
    TRANSIT_TRANSFER = "transit_transfer"
    MODE_TRANSFER = "mode_transfer"


WALKING_KINDS: FrozenSet[LinkKind] = frozenset(
    {LinkKind.ACCESS, LinkKind.EGRESS, LinkKind.TRANSIT_TRANSFER, LinkKind.MODE_TRANSFER}
)
# Heads of these links are where passengers wait for a service.
WAIT_HEAD_KINDS: FrozenSet[LinkKind] = frozenset(
    {LinkKind.ACCESS, LinkKind.TRANSIT_TRANSFER, LinkKind.MODE_TRANSFER}
)

_NODE_KIND_ALIASES = {
    "road": NodeKind.ROAD, "roadintersection": NodeKind.ROAD, "intersection": NodeKind.ROAD,
    "stop": NodeKind.STOP, "transitstop": NodeKind.STOP, "transit": NodeKind.STOP,
    "centroid": NodeKind.CENTROID, "zone": NodeKind.CENTROID,
}
_LINK_KIND_ALIASES = {
    "transit": LinkKind.TRANSIT, "road": LinkKind.ROAD, "access": LinkKind.ACCESS,
    "accesswalk": LinkKind.ACCESS, "egress": LinkKind.EGRESS, "egresswalk": LinkKind.EGRESS,
    "transit_transfer": LinkKind.TRANSIT_TRANSFER, "transittransfer": LinkKind.TRANSIT_TRANSFER,
    "mode_transfer": LinkKind.MODE_TRANSFER, "modetransfer": LinkKind.MODE_TRANSFER,
}


# --- Domain types ---

@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    zone: str
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class Link:
    id: str
    tail: str
    head: str
    kind: LinkKind
    travel_time: float
    fare: float = 0.0
    line: Optional[str] = None

    @property
    def is_walking(self) -> bool:
        return self.kind in WALKING_KINDS

    @property
    def is_service(self) -> bool:
        return self.kind in (LinkKind.TRANSIT, LinkKind.ROAD)


@dataclass(frozen=True)
class TransitLine:
    """A candidate line: ordered stops and the transit links joining them."""

    id: str
    stops: Tuple[str, ...]
    links: Tuple[str, ...]
    one_way_time: float
    candidate: bool = False


@dataclass(frozen=True)
class DemandMatrix:
    """Trips d_od between centroids; self-pairs are ignored."""

    entries: Mapping[Tuple[str, str], float] = field(default_factory=dict)

    @property
    def origins(self) -> List[str]:
        return sorted({o for (o, d), v in self.entries.items() if v > 0 and o != d})

    @property
    def destinations(self) -> List[str]:
        return sorted({d for (o, d), v in self.entries.items() if v > 0 and o != d})

    @property
    def total(self) -> float:
        return float(sum(v for (o, d), v in self.entries.items() if o != d))

    def to_destination(self, destination: str) -> Dict[str, float]:
        return {o: v for (o, d), v in self.entries.items() if d == destination and o != d and v > 0}


# --- Network container ---

class MultimodalNetwork:
    """
    Indexed multimodal digraph G(N, A) with zones, candidate lines and demand.

    Links keep their table order; that order is the link index used by every
    solver model built on the network. Nodes are indexed in insertion order.
    """

    def __init__(
        self,
        nodes: Iterable[Node],
        links: Iterable[Link],
        lines: Iterable[TransitLine] = (),
        demand: Optional[DemandMatrix] = None,
        distances: Optional[Mapping[Tuple[str, str], float]] = None,
    ) -> None:
        self._nodes: Dict[str, Node] = {}
        for node in nodes:
            if node.id in self._nodes:
                raise NetworkDataError(f"Duplicate node id '{node.id}'")
            self._nodes[node.id] = node
        self.node_ids: Tuple[str, ...] = tuple(self._nodes)
        self.node_index: Dict[str, int] = {n: i for i, n in enumerate(self.node_ids)}

        self.links: Tuple[Link, ...] = tuple(links)
        self.link_index: Dict[str, int] = {}
        fs: Dict[str, List[int]] = defaultdict(list)
        bs: Dict[str, List[int]] = defaultdict(list)
        for idx, link in enumerate(self.links):
            if link.id in self.link_index:
                raise NetworkDataError(f"Duplicate link id '{link.id}'")
            if link.tail not in self._nodes or link.head not in self._nodes:
                raise NetworkDataError(f"Link '{link.id}' references unknown node(s) {link.tail}->{link.head}")
            self.link_index[link.id] = idx
            fs[link.tail].append(idx)
            bs[link.head].append(idx)
        self._fs = {n: tuple(fs.get(n, ())) for n in self.node_ids}
        self._bs = {n: tuple(bs.get(n, ())) for n in self.node_ids}

        self.lines: Dict[str, TransitLine] = {line.id: line for line in lines}
        self.demand: DemandMatrix = demand or DemandMatrix({})
        self.distances: Dict[Tuple[str, str], float] = dict(distances or {})

        self.zones: Tuple[str, ...] = tuple(sorted({n.zone for n in self._nodes.values()}))
        self.waiting_nodes: FrozenSet[str] = frozenset(
            link.head for link in self.links if link.kind in WAIT_HEAD_KINDS
        )

    # --- Accessors ---

    @property
    def nodes(self) -> Mapping[str, Node]:
        return self._nodes

    def node(self, node_id: str) -> Node:
        return self._nodes[node_id]

    def fs(self, node_id: str) -> Tuple[int, ...]:
        """Indices of links leaving node_id, FS(i)."""
        return self._fs[node_id]

    def bs(self, node_id: str) -> Tuple[int, ...]:
        """Indices of links entering node_id, BS(i)."""
        return self._bs[node_id]

    def zone_of(self, node_id: str) -> str:
        return self._nodes[node_id].zone

    def nodes_of_kind(self, kind: NodeKind) -> List[str]:
        return [n for n in self.node_ids if self._nodes[n].kind == kind]

    def links_of_kind(self, *kinds: LinkKind) -> List[int]:
        wanted = set(kinds)
        return [i for i, link in enumerate(self.links) if link.kind in wanted]

    @property
    def ordered_waiting_nodes(self) -> List[str]:
        return [n for n in self.node_ids if n in self.waiting_nodes]

    def service_departures(self, node_id: str, kind: LinkKind) -> List[int]:
        """Links of `kind` (TRANSIT or ROAD) leaving a waiting node; empty for non-waiting nodes."""
        if node_id not in self.waiting_nodes:
            return []
        return [i for i in self._fs[node_id] if self.links[i].kind == kind]

    @property
    def road_waiting_nodes(self) -> List[str]:
        """Waiting nodes with MoD (road) departures, the index set of the ω surrogates."""
        return [n for n in self.ordered_waiting_nodes if self.service_departures(n, LinkKind.ROAD)]

    def distance(self, a: str, b: str) -> float:
        """𝔡(a, b): the override table when present, Euclidean on coordinates otherwise."""
        if (a, b) in self.distances:
            return self.distances[(a, b)]
        if (b, a) in self.distances:
            return self.distances[(b, a)]
        na, nb = self._nodes[a], self._nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)

    def line_of_stop(self) -> Dict[str, Set[str]]:
        membership: Dict[str, Set[str]] = defaultdict(set)
        for line in self.lines.values():
            for stop in line.stops:
                membership[stop].add(line.id)
        return membership

    def link_costs(self, value_of_time: float) -> np.ndarray:
        return np.array([link_cost(link, value_of_time) for link in self.links], dtype=float)

    def with_links(self, links: Iterable[Link]) -> "MultimodalNetwork":
        return MultimodalNetwork(self._nodes.values(), links, self.lines.values(), self.demand, self.distances)

    def with_demand(self, demand: DemandMatrix) -> "MultimodalNetwork":
        return MultimodalNetwork(self._nodes.values(), self.links, self.lines.values(), demand, self.distances)

    def summary(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in LinkKind}
        for link in self.links:
            counts[link.kind.value] += 1
        counts["nodes"] = len(self.node_ids)
        counts["waiting_nodes"] = len(self.waiting_nodes)
        counts["lines"] = len(self.lines)
        counts["zones"] = len(self.zones)
        return counts

    def __repr__(self) -> str:
        return f"MultimodalNetwork(|N|={len(self.node_ids)}, |A|={len(self.links)}, |L|={len(self.lines)})"

    # --- Demand ---

    def graph(self, kinds: Optional[Iterable[LinkKind]] = None) -> nx.DiGraph:
        wanted = set(kinds) if kinds is not None else None
        g = nx.DiGraph()
        g.add_nodes_from(self.node_ids)
        for link in self.links:
            if wanted is None or link.kind in wanted:
                g.add_edge(link.tail, link.head)
        return g

    def unreachable_pairs(self) -> List[Tuple[str, str]]:
        """OD pairs with positive demand and no directed path in G."""
        g = self.graph()
        missing: List[Tuple[str, str]] = []
        for destination in self.demand.destinations:
            reach = nx.ancestors(g, destination)
            for origin in self.demand.to_destination(destination):
                if origin not in reach:
                    missing.append((origin, destination))
        return sorted(missing)

    def served_demand(self) -> DemandMatrix:
        """Demand with unreachable pairs removed."""
        missing = set(self.unreachable_pairs())
        if missing:
            logger.warning(f"{len(missing)} OD pair(s) unreachable in the network; reported as unsatisfied demand.")
        return DemandMatrix({od: v for od, v in self.demand.entries.items() if od not in missing})

    def g_vector(self, destination: str, demand: Optional[DemandMatrix] = None) -> np.ndarray:
        """g_ik over node order for destination k (column sums to zero)."""
        source = demand if demand is not None else self.demand
        g = np.zeros(len(self.node_ids))
        for origin, trips in source.to_destination(destination).items():
            g[self.node_index[origin]] += trips
            g[self.node_index[destination]] -= trips
        return g


# --- Costs ---

def link_cost(link: Link, value_of_time: float) -> float:
    """Generalized cost in minutes: travel time plus fare converted with the value of time ($/hr)."""
    if value_of_time <= 0:
        raise ValueError(f"value of time must be positive, got {value_of_time}")
    return float(link.travel_time + link.fare / value_of_time * 60.0)


def assign_fares(
    network: MultimodalNetwork,
    transit_fare: float,
    mod_base_fare: float,
    mod_fare_per_minute: float,
) -> MultimodalNetwork:
    """
    Attach fares to service links.

    Every departure from a waiting node counts as a boarding: transit links
    leaving a waiting node carry the transit fare, road links leaving a waiting
    node carry the MoD base fare. The per-minute MoD fare is folded into every
    road link. Fares already present on other links are kept.
    """
    waiting = network.waiting_nodes
    priced: List[Link] = []
    for link in network.links:
        if link.kind == LinkKind.TRANSIT:
            fare = transit_fare if link.tail in waiting else 0.0
            priced.append(replace(link, fare=fare))
        elif link.kind == LinkKind.ROAD:
            fare = mod_fare_per_minute * link.travel_time
            if link.tail in waiting:
                fare += mod_base_fare
            priced.append(replace(link, fare=fare))
        else:
            priced.append(link)
    return network.with_links(priced)


# --- Walking links ---

def _neighbors_within(network: MultimodalNetwork, radius: float) -> Dict[str, Set[str]]:
    """Node ids within Euclidean `radius` of each node, plus both ends of every override pair."""
    ids = list(network.nodes)
    coords = np.array([(network.node(i).x, network.node(i).y) for i in ids], dtype=float)
    near: Dict[str, Set[str]] = defaultdict(set)
    if len(ids) > 1:
        for i, j in KDTree(coords).query_pairs(radius + 1e-12):
            near[ids[i]].add(ids[j])
            near[ids[j]].add(ids[i])
    for a, b in network.distances:
        if a in network.nodes and b in network.nodes:
            near[a].add(b)
            near[b].add(a)
    return near


def build_walking_links(
    network: MultimodalNetwork,
    walk_radius: float,
    walk_speed: float = 3.0,
) -> MultimodalNetwork:
    """
    Regenerate access, egress, mode-transfer and transit-transfer links.

    Existing walking links are dropped first, so the operation is idempotent.
    Walking time is 𝔡(n1, n2) / walk_speed, in minutes when distances are in
    miles and the speed in mph. Candidate pairs come from a KD-tree radius
    query on the coordinates plus every pair of the distance override table;
    𝔡 then decides.
    """
    if walk_radius <= 0:
        raise ValueError(f"walking radius must be positive, got {walk_radius}")
    kept = [link for link in network.links if not link.is_walking]
    centroids = network.nodes_of_kind(NodeKind.CENTROID)
    stops = network.nodes_of_kind(NodeKind.STOP)
    roads = network.nodes_of_kind(NodeKind.ROAD)
    membership = network.line_of_stop()
    rank = {node_id: i for i, node_id in enumerate(stops + roads)}
    stop_set = set(stops)
    stop_or_road = stop_set | set(roads)
    near = _neighbors_within(network, walk_radius)

    def minutes(a: str, b: str) -> float:
        return network.distance(a, b) / walk_speed * 60.0

    def within(a: str, targets: Set[str]) -> List[str]:
        found = [b for b in near.get(a, ()) if b != a and b in targets and network.distance(a, b) <= walk_radius + 1e-12]
        return sorted(found, key=rank.__getitem__)

    generated: List[Link] = []
    for z in centroids:
        for n in within(z, stop_or_road):
            t = minutes(z, n)
            generated.append(Link(f"acc:{z}->{n}", z, n, LinkKind.ACCESS, t))
            generated.append(Link(f"egr:{n}->{z}", n, z, LinkKind.EGRESS, t))
    for r in roads:
        for s in within(r, stop_set):
            t = minutes(r, s)
            generated.append(Link(f"mtr:{r}->{s}", r, s, LinkKind.MODE_TRANSFER, t))
            generated.append(Link(f"mtr:{s}->{r}", s, r, LinkKind.MODE_TRANSFER, t))
    for s1 in stops:
        lines1 = membership.get(s1, set())
        for s2 in within(s1, stop_set):
            lines2 = membership.get(s2, set())
            if any(l1 != l2 for l1 in lines1 for l2 in lines2):
                generated.append(
                    Link(f"ttr:{s1}->{s2}", s1, s2, LinkKind.TRANSIT_TRANSFER, minutes(s1, s2))
                )
    logger.info(
        f"Generated {len(generated)} walking links within ζ={walk_radius} "
        f"({len(kept)} road/transit links kept)."
    )
    return network.with_links(kept + generated)


# --- Connectivity ---

def check_road_connected(network: MultimodalNetwork) -> bool:
    """
    True iff every destination is reachable from every origin and every road
    intersection using only road and walking links. This is the precondition
    under which the sentinel fleet keeps each Benders subproblem feasible.
    """
    kinds = set(WALKING_KINDS) | {LinkKind.ROAD}
    g = network.graph(kinds)
    sources = set(network.demand.origins) | set(network.nodes_of_kind(NodeKind.ROAD))
    for destination in network.demand.destinations:
        reach = nx.ancestors(g, destination) | {destination}
        missing = sources - reach
        if missing:
            logger.debug(f"Destination {destination} unreachable by road/walk from {sorted(missing)[:5]}...")
            return False
    return True


def transit_only_view(network: MultimodalNetwork) -> MultimodalNetwork:
    """The network without its road layer: road links and walking links touching road nodes removed."""
    roads = set(network.nodes_of_kind(NodeKind.ROAD))
    kept = [
        link for link in network.links
        if link.kind != LinkKind.ROAD and link.tail not in roads and link.head not in roads
    ]
    return network.with_links(kept)


# --- CSV ingestion ---

TableLike = Union[pd.DataFrame, str, Path]


def _read_table(table: TableLike, name: str) -> Tuple[pd.DataFrame, str]:
    if isinstance(table, pd.DataFrame):
        return table, name
    path = Path(table)
    if not path.exists():
        raise NetworkDataError(f"Input file not found: {path}", file=str(path))
    try:
        return pd.read_csv(path, encoding="utf-8", dtype=str, keep_default_na=False), str(path)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise NetworkDataError(f"Could not parse CSV: {e}", file=str(path)) from e


def _column(df: pd.DataFrame, source: str, *names: str, required: bool = True) -> Optional[str]:
    lowered = {c.strip().lower(): c for c in df.columns}
    for name in names:
        if name.lower() in lowered:
            return lowered[name.lower()]
    if required:
        raise NetworkDataError(f"Missing column; expected one of {list(names)}", file=source)
    return None


def _number(value: object, source: str, row: int, what: str) -> float:
    try:
        number = float(str(value).strip())
    except ValueError as e:
        raise NetworkDataError(f"Non-numeric {what} '{value}'", file=source, row=row) from e
    if math.isnan(number) or math.isinf(number):
        raise NetworkDataError(f"Non-finite {what} '{value}'", file=source, row=row)
    return number


def load_network(
    node_table: TableLike,
    link_table: TableLike,
    line_table: Optional[TableLike] = None,
    demand_table: Optional[TableLike] = None,
) -> MultimodalNetwork:
    """
    Build a validated network from node, link, line and demand tables.

    Args:
        node_table: nodeId, x|X|long, y|Y|lat, kind, zone (centroids default to their own zone).
        link_table: fromNodeId, toNodeId, kind, travelTime, fare (optional), lineId (optional).
        line_table: lineId, stops ("s1;s2;..."), candidate (optional). Derived from transit links when absent.
        demand_table: origin, destination, trips.

    Errors name the offending file and its CSV line number.
    """
    nodes_df, nodes_src = _read_table(node_table, "nodes.csv")
    links_df, links_src = _read_table(link_table, "links.csv")

    id_col = _column(nodes_df, nodes_src, "nodeId", "node", "id")
    x_col = _column(nodes_df, nodes_src, "x", "long", "lon", "longitude")
    y_col = _column(nodes_df, nodes_src, "y", "lat", "latitude")
    kind_col = _column(nodes_df, nodes_src, "kind", "type", required=False)
    zone_col = _column(nodes_df, nodes_src, "zone", required=False)

    nodes: List[Node] = []
    seen_nodes: Set[str] = set()
    pending_zone: List[int] = []
    for pos, rec in enumerate(nodes_df.to_dict("records")):
        row = pos + 2
        node_id = str(rec[id_col]).strip()
        if not node_id:
            raise NetworkDataError("Empty node id", file=nodes_src, row=row)
        if node_id in seen_nodes:
            raise NetworkDataError(f"Duplicate node id '{node_id}'", file=nodes_src, row=row)
        seen_nodes.add(node_id)
        raw_kind = str(rec[kind_col]).strip().lower().replace(" ", "") if kind_col else "road"
        kind = _NODE_KIND_ALIASES.get(raw_kind)
        if kind is None:
            raise NetworkDataError(f"Unknown node kind '{rec[kind_col]}'", file=nodes_src, row=row)
        zone = str(rec[zone_col]).strip() if zone_col else ""
        if not zone and kind == NodeKind.CENTROID:
            zone = node_id
        nodes.append(Node(node_id, kind, zone, _number(rec[x_col], nodes_src, row, "x"),
                          _number(rec[y_col], nodes_src, row, "y")))
        if not zone:
            pending_zone.append(len(nodes) - 1)

    if pending_zone:
        centroids = [n for n in nodes if n.kind == NodeKind.CENTROID]
        if not centroids:
            raise NetworkDataError("Nodes without zone and no centroid to infer it from", file=nodes_src)
        for idx in pending_zone:
            n = nodes[idx]
            nearest = min(centroids, key=lambda c: (math.hypot(c.x - n.x, c.y - n.y), c.id))
            nodes[idx] = replace(n, zone=nearest.zone)
        logger.info(f"Inferred zone from nearest centroid for {len(pending_zone)} node(s).")

    from_col = _column(links_df, links_src, "fromNodeId", "from", "tail", "init_node")
    to_col = _column(links_df, links_src, "toNodeId", "to", "head", "term_node")
    lkind_col = _column(links_df, links_src, "kind", "type")
    time_col = _column(links_df, links_src, "travelTime", "travel_time", "time", "free_flow_time")
    fare_col = _column(links_df, links_src, "fare", required=False)
    line_col = _column(links_df, links_src, "lineId", "line", required=False)
    lid_col = _column(links_df, links_src, "linkId", "id", required=False)

    links: List[Link] = []
    seen_links: Set[Tuple[str, str, LinkKind, Optional[str]]] = set()
    seen_ids: Set[str] = set()
    for pos, rec in enumerate(links_df.to_dict("records")):
        row = pos + 2
        tail, head = str(rec[from_col]).strip(), str(rec[to_col]).strip()
        for end in (tail, head):
            if end not in seen_nodes:
                raise NetworkDataError(f"Link references missing node '{end}'", file=links_src, row=row)
        kind = _LINK_KIND_ALIASES.get(str(rec[lkind_col]).strip().lower().replace(" ", ""))
        if kind is None:
            raise NetworkDataError(f"Unknown link kind '{rec[lkind_col]}'", file=links_src, row=row)
        travel_time = _number(rec[time_col], links_src, row, "travel time")
        if travel_time < 0:
            raise NetworkDataError(f"Negative travel time {travel_time}", file=links_src, row=row)
        fare = _number(rec[fare_col], links_src, row, "fare") if fare_col and str(rec[fare_col]).strip() else 0.0
        line = str(rec[line_col]).strip() if line_col and str(rec[line_col]).strip() else None
        if kind == LinkKind.TRANSIT and line is None:
            raise NetworkDataError("Transit link without lineId", file=links_src, row=row)
        if kind != LinkKind.TRANSIT and line is not None:
            raise NetworkDataError(f"Non-transit link carries lineId '{line}'", file=links_src, row=row)
        key = (tail, head, kind, line)
        if key in seen_links:
            raise NetworkDataError(f"Duplicate link {tail}->{head} ({kind.value})", file=links_src, row=row)
        seen_links.add(key)
        link_id = str(rec[lid_col]).strip() if lid_col and str(rec[lid_col]).strip() else ""
        if not link_id:
            link_id = f"{kind.value}:{tail}->{head}" + (f"@{line}" if line else "")
        if link_id in seen_ids:
            raise NetworkDataError(f"Duplicate link id '{link_id}'", file=links_src, row=row)
        seen_ids.add(link_id)
        links.append(Link(link_id, tail, head, kind, travel_time, fare, line))

    lines = _build_lines(links, line_table)
    demand = _load_demand(demand_table, seen_nodes, {n.id for n in nodes if n.kind == NodeKind.CENTROID})
    network = MultimodalNetwork(nodes, links, lines, demand)
    logger.info(f"Loaded {network!r} with {len(demand.entries)} demand entries.")
    return network


def _build_lines(links: Sequence[Link], line_table: Optional[TableLike]) -> List[TransitLine]:
    by_line: Dict[str, List[Link]] = defaultdict(list)
    for link in links:
        if link.kind == LinkKind.TRANSIT and link.line is not None:
            by_line[link.line].append(link)

    if line_table is None:
        return [_line_from_links(line_id, line_links) for line_id, line_links in sorted(by_line.items())]

    df, src = _read_table(line_table, "lines.csv")
    id_col = _column(df, src, "lineId", "line", "id")
    stops_col = _column(df, src, "stops")
    cand_col = _column(df, src, "candidate", required=False)
    lines: List[TransitLine] = []
    for pos, rec in enumerate(df.to_dict("records")):
        row = pos + 2
        line_id = str(rec[id_col]).strip()
        stops = tuple(s.strip() for s in str(rec[stops_col]).replace(" ", ";").split(";") if s.strip())
        if len(stops) < 2:
            raise NetworkDataError(f"Line '{line_id}' needs at least two stops", file=src, row=row)
        lookup = {(l.tail, l.head): l for l in by_line.get(line_id, [])}
        chain: List[Link] = []
        for a, b in zip(stops[:-1], stops[1:]):
            if (a, b) not in lookup:
                raise NetworkDataError(f"Line '{line_id}' has no transit link {a}->{b}", file=src, row=row)
            chain.append(lookup[(a, b)])
        candidate = str(rec[cand_col]).strip().lower() in {"1", "true", "yes", "y"} if cand_col else False
        lines.append(TransitLine(line_id, stops, tuple(l.id for l in chain),
                                 float(sum(l.travel_time for l in chain)), candidate))
    return lines


def _line_from_links(line_id: str, line_links: List[Link]) -> TransitLine:
    """Order a line's links into a path (or cycle) starting from a stop with no incoming line link."""
    heads = {l.head for l in line_links}
    nexts = {l.tail: l for l in line_links}
    start = next((l.tail for l in line_links if l.tail not in heads), line_links[0].tail)
    stops, chain, cur = [start], [], start
    while cur in nexts and len(chain) < len(line_links):
        link = nexts[cur]
        chain.append(link)
        cur = link.head
        stops.append(cur)
    if len(chain) != len(line_links):
        raise NetworkDataError(f"Transit links of line '{line_id}' do not form a single path or cycle")
    return TransitLine(line_id, tuple(stops), tuple(l.id for l in chain), float(sum(l.travel_time for l in chain)))


def _load_demand(demand_table: Optional[TableLike], node_ids: Set[str], centroids: Set[str]) -> DemandMatrix:
    if demand_table is None:
        return DemandMatrix({})
    df, src = _read_table(demand_table, "demand.csv")
    o_col = _column(df, src, "origin", "o", "from")
    d_col = _column(df, src, "destination", "d", "to")
    t_col = _column(df, src, "trips", "demand", "flow")
    entries: Dict[Tuple[str, str], float] = defaultdict(float)
    for pos, rec in enumerate(df.to_dict("records")):
        row = pos + 2
        o, d = str(rec[o_col]).strip(), str(rec[d_col]).strip()
        for end in (o, d):
            if end not in node_ids:
                raise NetworkDataError(f"Demand references missing node '{end}'", file=src, row=row)
            if end not in centroids:
                raise NetworkDataError(f"Demand endpoint '{end}' is not a centroid", file=src, row=row)
        trips = _number(rec[t_col], src, row, "trips")
        if trips < 0:
            raise NetworkDataError(f"Negative demand {trips}", file=src, row=row)
        entries[(o, d)] += trips
    return DemandMatrix(dict(entries))


def load_network_dir(directory: Union[str, Path]) -> MultimodalNetwork:
    """Load nodes.csv, links.csv, lines.csv (optional) and demand.csv from one directory."""
    base = Path(directory)
    if not base.is_dir():
        raise NetworkDataError(f"Network directory not found: {base}", file=str(base))
    lines = base / "lines.csv"
    return load_network(
        base / "nodes.csv",
        base / "links.csv",
        lines if lines.exists() else None,
        base / "demand.csv",
    )


def write_network_dir(network: MultimodalNetwork, directory: Union[str, Path]) -> None:
    """Write the network in the CSV layout read by load_network_dir."""
    base = Path(directory)
    base.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(
        [{"nodeId": n.id, "x": n.x, "y": n.y, "kind": n.kind.value, "zone": n.zone}
         for n in network.nodes.values()]
    ).to_csv(base / "nodes.csv", index=False)
    pd.DataFrame(
        [{"linkId": l.id, "fromNodeId": l.tail, "toNodeId": l.head, "kind": l.kind.value,
          "travelTime": l.travel_time, "fare": l.fare, "lineId": l.line or ""}
         for l in network.links],
        columns=["linkId", "fromNodeId", "toNodeId", "kind", "travelTime", "fare", "lineId"],
    ).to_csv(base / "links.csv", index=False)
    pd.DataFrame(
        [{"lineId": line.id, "stops": ";".join(line.stops), "candidate": int(line.candidate)}
         for line in network.lines.values()],
        columns=["lineId", "stops", "candidate"],
    ).to_csv(base / "lines.csv", index=False)
    pd.DataFrame(
        [{"origin": o, "destination": d, "trips": v} for (o, d), v in sorted(network.demand.entries.items())],
        columns=["origin", "destination", "trips"],
    ).to_csv(base / "demand.csv", index=False)
