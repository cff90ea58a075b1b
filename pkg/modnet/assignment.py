# modnet/assignment.py
"""
Strategy-based multimodal assignment for a fixed design.

For every destination k the LP minimizes Σ c_a v_ak + Σ W_ik subject to
flow conservation and, at each waiting node, one proportion row per
departing service link: v_ak <= f_l W_ik for transit links of line l and
v_ak <= A_z V_z W_ik for road (MoD) links. Destinations are independent, so
each gets its own LP and the results are summed.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from .design_model import DesignDecision, DesignSpace, token
from .exceptions import SolverError
from .models import DesignConfig
from .network import DemandMatrix, LinkKind, MultimodalNetwork
from .solver_kernel import Sense, SolverModel, Status, solve_lp

logger = logging.getLogger(__name__)

FLOW_TOL = 1e-9


# --- Problem ---

@dataclass
class AssignmentProblem:
    """Network, fixed design and the demand that can actually be routed."""

    network: MultimodalNetwork
    design: DesignDecision
    config: DesignConfig
    demand: DemandMatrix = field(init=False)
    unsatisfied: List[Tuple[str, str]] = field(init=False)
    costs: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.unsatisfied = self.network.unreachable_pairs()
        self.demand = self.network.served_demand()
        self.costs = self.network.link_costs(self.config.value_of_time)

    @property
    def destinations(self) -> List[str]:
        return self.demand.destinations

    def link_rate(self, a: int) -> float:
        """Service rate (per minute) bounding flow on a service link leaving a waiting node."""
        link = self.network.links[a]
        if link.kind == LinkKind.TRANSIT:
            return self.design.rate_per_minute(link.line or "")
        zone = self.network.zone_of(link.tail)
        return self.config.matching_for(zone) * self.design.fleet(zone)


@dataclass
class DestinationIndex:
    v: Dict[int, int]
    W: Dict[str, int]


def build_assignment_lp(
    problem: AssignmentProblem, destination: Optional[str] = None
) -> Tuple[SolverModel, Dict[str, DestinationIndex]]:
    """
    The assignment LP for one destination, or the block-diagonal LP over all
    served destinations when destination is None.
    """
    network = problem.network
    dests = [destination] if destination is not None else problem.destinations
    model = SolverModel(f"assignment[{token(destination)}]" if destination else "assignment")
    index: Dict[str, DestinationIndex] = {}
    for k in dests:
        kt = token(k)
        g = network.g_vector(k, problem.demand)
        v = {a: model.add_var(f"v[{token(link.id)},{kt}]", 0.0, math.inf, float(problem.costs[a]))
             for a, link in enumerate(network.links)}
        W = {i: model.add_var(f"W[{token(i)},{kt}]", 0.0, math.inf, 1.0) for i in network.ordered_waiting_nodes}
        for pos, i in enumerate(network.node_ids):
            coefs: Dict[int, float] = {}
            for a in network.fs(i):
                coefs[v[a]] = coefs.get(v[a], 0.0) + 1.0
            for a in network.bs(i):
                coefs[v[a]] = coefs.get(v[a], 0.0) - 1.0
            model.add_constraint(coefs, Sense.EQ, float(g[pos]), f"flow[{token(i)},{kt}]")
        for i in network.ordered_waiting_nodes:
            for kind, tag in ((LinkKind.TRANSIT, "ptr"), (LinkKind.ROAD, "prd")):
                for a in network.service_departures(i, kind):
                    model.add_constraint({v[a]: 1.0, W[i]: -problem.link_rate(a)}, Sense.LE, 0.0,
                                         f"{tag}[{token(network.links[a].id)},{token(i)},{kt}]")
        index[k] = DestinationIndex(v, W)
    return model, index


# --- Solution ---

@dataclass
class AssignmentSolution:
    """Link flows and wait stocks per destination, with the objective split."""

    destinations: List[str]
    flows: np.ndarray                   # |A| x |D|
    waits: np.ndarray                   # |N| x |D|, zero at non-waiting nodes
    objective: float
    link_cost_total: float
    transit_wait: float
    road_wait: float
    status: Status
    per_destination: Dict[str, float]
    served_trips: float
    total_trips: float
    unsatisfied: List[Tuple[str, str]] = field(default_factory=list)

    def flow(self, a: int, destination: str) -> float:
        return float(self.flows[a, self.destinations.index(destination)])


def _solve_destination(problem: AssignmentProblem, destination: str) -> Tuple[np.ndarray, np.ndarray, float]:
    model, index = build_assignment_lp(problem, destination)
    result = solve_lp(model)
    if result.status != Status.OPTIMAL:
        raise SolverError(f"Assignment LP ended with status {result.status.value}", result.status, destination)
    idx = index[destination]
    net = problem.network
    v = np.array([max(result.x[idx.v[a]], 0.0) for a in range(len(net.links))])
    w = np.zeros(len(net.node_ids))
    for i, col in idx.W.items():
        w[net.node_index[i]] = max(result.x[col], 0.0)
    logger.debug(f"Assignment for destination {destination}: objective {result.objective:.6f}.")
    return v, w, result.objective


def split_waits(network: MultimodalNetwork, flows: np.ndarray, waits: np.ndarray) -> Tuple[float, float]:
    """
    (transit wait, road wait) in passenger-minutes.

    The wait stock at a node is split by the shares of its departing transit
    and road flow; a node with no departing service flow is attributed to
    the service it offers (transit first).
    """
    transit_total = road_total = 0.0
    for i in network.ordered_waiting_nodes:
        pos = network.node_index[i]
        transit = network.service_departures(i, LinkKind.TRANSIT)
        road = network.service_departures(i, LinkKind.ROAD)
        for col in range(waits.shape[1]):
            w = waits[pos, col]
            if w <= 0:
                continue
            ft = float(sum(flows[a, col] for a in transit))
            fr = float(sum(flows[a, col] for a in road))
            if ft + fr > FLOW_TOL:
                transit_total += w * ft / (ft + fr)
                road_total += w * fr / (ft + fr)
            elif transit:
                transit_total += w
            else:
                road_total += w
    return transit_total, road_total


def solve_assignment(problem: AssignmentProblem, jobs: int = 1) -> AssignmentSolution:
    """
    Solve every destination LP (concurrently with jobs > 1) and sum the results.

    Raises:
        SolverError: When a destination LP is not optimal; the destination id is attached.
    """
    net = problem.network
    dests = problem.destinations
    flows = np.zeros((len(net.links), len(dests)))
    waits = np.zeros((len(net.node_ids), len(dests)))
    per_destination: Dict[str, float] = {}
    if jobs > 1 and len(dests) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda k: _solve_destination(problem, k), dests))
    else:
        results = [_solve_destination(problem, k) for k in dests]
    for col, (k, (v, w, obj)) in enumerate(zip(dests, results)):
        flows[:, col] = v
        waits[:, col] = w
        per_destination[k] = obj

    link_cost_total = float(problem.costs @ flows.sum(axis=1)) if dests else 0.0
    transit_wait, road_wait = split_waits(net, flows, waits)
    objective = float(sum(per_destination.values()))
    logger.info(
        f"Assignment solved for {len(dests)} destination(s): objective {objective:.4f} "
        f"(links {link_cost_total:.4f}, transit wait {transit_wait:.4f}, road wait {road_wait:.4f})."
    )
    return AssignmentSolution(
        destinations=list(dests), flows=flows, waits=waits, objective=objective,
        link_cost_total=link_cost_total, transit_wait=transit_wait, road_wait=road_wait,
        status=Status.OPTIMAL, per_destination=per_destination,
        served_trips=problem.demand.total, total_trips=net.demand.total,
        unsatisfied=list(problem.unsatisfied),
    )


def conservation_residual(network: MultimodalNetwork, solution: AssignmentSolution, demand: DemandMatrix) -> float:
    """max |out - in - g| / (1 + |g|) over nodes and destinations."""
    worst = 0.0
    for col, k in enumerate(solution.destinations):
        g = network.g_vector(k, demand)
        for pos, i in enumerate(network.node_ids):
            out = sum(solution.flows[a, col] for a in network.fs(i))
            inn = sum(solution.flows[a, col] for a in network.bs(i))
            worst = max(worst, abs(out - inn - g[pos]) / (1.0 + abs(g[pos])))
    return float(worst)


# --- Mode shares ---

@dataclass
class ModeShares:
    """Percent of served trips by the services their route uses."""

    mod: float = 0.0
    transit: float = 0.0
    multimodal: float = 0.0
    walk_only: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        return {"mod": self.mod, "transit": self.transit, "multimodal": self.multimodal, "walk_only": self.walk_only}


_NONE, _ROAD, _TRANSIT, _BOTH = 0, 1, 2, 3


def _cancel_cycles(network: MultimodalNetwork, flow: np.ndarray) -> np.ndarray:
    flow = flow.copy()
    while True:
        g = nx.DiGraph()
        for a, link in enumerate(network.links):
            if flow[a] > FLOW_TOL and not g.has_edge(link.tail, link.head):
                g.add_edge(link.tail, link.head, link=a)
        try:
            cycle = nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return flow
        arcs = [g.edges[u, v]["link"] for u, v in cycle]
        delta = min(flow[a] for a in arcs)
        for a in arcs:
            flow[a] -= delta
        logger.debug(f"Cancelled a flow cycle of {len(arcs)} link(s), amount {delta:.3e}.")


def _destination_classes(network: MultimodalNetwork, flow: np.ndarray, g: np.ndarray, destination: str) -> np.ndarray:
    """Trips arriving at `destination` by class (none, road, transit, both)."""
    flow = _cancel_cycles(network, flow)
    graph = nx.DiGraph()
    graph.add_nodes_from(network.node_ids)
    for a, link in enumerate(network.links):
        if flow[a] > FLOW_TOL:
            graph.add_edge(link.tail, link.head)
    mass = {i: np.zeros(4) for i in network.node_ids}
    for pos, i in enumerate(network.node_ids):
        if g[pos] > 0:
            mass[i][_NONE] += g[pos]
    arrived = np.zeros(4)
    for i in nx.topological_sort(graph):
        if i == destination:
            arrived += mass[i]
            continue
        out = [a for a in network.fs(i) if flow[a] > FLOW_TOL]
        total = float(sum(flow[a] for a in out))
        if total <= FLOW_TOL:
            continue
        for a in out:
            share = flow[a] / total
            kind = network.links[a].kind
            tag = _ROAD if kind == LinkKind.ROAD else _TRANSIT if kind == LinkKind.TRANSIT else _NONE
            for state in range(4):
                if mass[i][state] > 0:
                    mass[network.links[a].head][state | tag] += mass[i][state] * share
    return arrived


def mode_shares(solution: AssignmentSolution, network: MultimodalNetwork) -> ModeShares:
    """
    Road/transit/multimodal shares of served trips from a flow decomposition.

    Per destination, flow cycles are cancelled and origin supply is pushed
    along the positive-flow DAG in topological order, split in proportion to
    link flows. A trip is MoD if its route touches road links only, transit
    if transit links only, multimodal if both, walk-only if neither.
    """
    served = network.served_demand()
    totals = np.zeros(4)
    for col, k in enumerate(solution.destinations):
        totals += _destination_classes(network, solution.flows[:, col], network.g_vector(k, served), k)
    trips = float(totals.sum())
    if trips <= FLOW_TOL:
        return ModeShares()
    pct = 100.0 * totals / trips
    return ModeShares(mod=float(pct[_ROAD]), transit=float(pct[_TRANSIT]),
                      multimodal=float(pct[_BOTH]), walk_only=float(pct[_NONE]))


def in_vehicle_minutes(network: MultimodalNetwork, solution: AssignmentSolution) -> float:
    """Passenger-minutes spent on transit and road links (travel time only)."""
    times = np.array([l.travel_time if l.is_service else 0.0 for l in network.links])
    return float(times @ solution.flows.sum(axis=1)) if solution.flows.size else 0.0


# --- Wait bounds ---

def _min_rates(space: DesignSpace, node: str) -> List[float]:
    network = space.network
    rates: List[float] = []
    if network.service_departures(node, LinkKind.TRANSIT):
        rates.append(min(space.thetas) / 60.0)
    if network.service_departures(node, LinkKind.ROAD):
        rates.append(space.config.matching_for(network.zone_of(node)) * min(space.omegas))
    return rates


def analytic_wait_bounds(space: DesignSpace, demand: DemandMatrix) -> Dict[Tuple[str, str], float]:
    """
    W̄_ik = D_k / r_min(i): all trips to k waiting at i behind the slowest
    service the menus allow there. Zero at waiting nodes without service departures.
    """
    bounds: Dict[Tuple[str, str], float] = {}
    for k in demand.destinations:
        trips = float(sum(demand.to_destination(k).values()))
        for i in space.network.ordered_waiting_nodes:
            rates = _min_rates(space, i)
            bounds[(i, k)] = trips / min(rates) if rates else 0.0
    return bounds


def estimate_wait_upper_bounds(
    network: MultimodalNetwork,
    config: DesignConfig,
    space: Optional[DesignSpace] = None,
    method: Optional[str] = None,
    jobs: int = 1,
) -> Dict[Tuple[str, str], float]:
    """
    W̄ per (waiting node, destination).

    Args:
        method: "analytic" (default, see analytic_wait_bounds) or "assignment":
            solve at the worst design (all lines closed, smallest fleet) and scale
            the resulting W by config.wait_bound_safety, floored by the transit
            analytic bound wherever transit departs.
    """
    space = space or DesignSpace(network, config)
    method = method or config.wait_bound_method
    demand = network.served_demand()
    analytic = analytic_wait_bounds(space, demand)
    if method == "analytic":
        logger.info(f"Analytic wait bounds for {len(analytic)} (node, destination) pair(s).")
        return analytic

    worst = DesignDecision({}, {z: min(space.omegas) for z in space.zones})
    solution = solve_assignment(AssignmentProblem(network, worst, config), jobs=jobs)
    bounds: Dict[Tuple[str, str], float] = {}
    for col, k in enumerate(solution.destinations):
        trips = float(sum(demand.to_destination(k).values()))
        for i in network.ordered_waiting_nodes:
            estimate = config.wait_bound_safety * solution.waits[network.node_index[i], col]
            if network.service_departures(i, LinkKind.TRANSIT):
                estimate = max(estimate, trips / (min(space.thetas) / 60.0))
            elif not network.service_departures(i, LinkKind.ROAD):
                estimate = 0.0
            bounds[(i, k)] = estimate
    logger.info(f"Assignment-based wait bounds at the worst design for {len(bounds)} pair(s).")
    return bounds


def evaluate_design(
    network: MultimodalNetwork, design: DesignDecision, config: DesignConfig, jobs: int = 1
) -> AssignmentSolution:
    return solve_assignment(AssignmentProblem(network, design, config), jobs=jobs)


def flow_rows(network: MultimodalNetwork, solution: AssignmentSolution, tol: float = FLOW_TOL) -> List[Dict[str, object]]:
    """flows.csv rows: fromNodeId, toNodeId, destination, flow (positive flows only)."""
    rows: List[Dict[str, object]] = []
    for col, k in enumerate(solution.destinations):
        for a, link in enumerate(network.links):
            value = solution.flows[a, col]
            if value > tol:
                rows.append({"linkId": link.id, "fromNodeId": link.tail, "toNodeId": link.head,
                             "kind": link.kind.value, "destination": k, "flow": float(value)})
    return rows


def wait_rows(network: MultimodalNetwork, solution: AssignmentSolution, tol: float = FLOW_TOL) -> List[Dict[str, object]]:
    """waits.csv rows: nodeId, destination, wait (passenger-minutes)."""
    rows: List[Dict[str, object]] = []
    for col, k in enumerate(solution.destinations):
        for i in network.ordered_waiting_nodes:
            value = solution.waits[network.node_index[i], col]
            if value > tol:
                rows.append({"nodeId": i, "destination": k, "wait": float(value)})
    return rows


def proportion_slack(problem: AssignmentProblem, solution: AssignmentSolution) -> Dict[Tuple[str, str], float]:
    """Smallest slack f·W - v over the proportion rows of each (waiting node, destination) with W > 0."""
    net = problem.network
    slack: Dict[Tuple[str, str], float] = {}
    for col, k in enumerate(solution.destinations):
        for i in net.ordered_waiting_nodes:
            w = solution.waits[net.node_index[i], col]
            if w <= 1e-9:
                continue
            values: List[float] = []
            for kind in (LinkKind.TRANSIT, LinkKind.ROAD):
                for a in net.service_departures(i, kind):
                    values.append(problem.link_rate(a) * w - solution.flows[a, col])
            if values:
                slack[(i, k)] = float(min(values))
    return slack

