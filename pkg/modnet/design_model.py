# modnet/design_model.py
"""
Design-side data and the linearized design MILP.

DesignSpace fixes the order of the design binaries (x per line, y per
line/frequency, N per zone/fleet level). Every model that mentions design
variables (the monolith MILP, the Benders master, the cuts) indexes them
through the same space, so a bit vector means the same thing everywhere.

The bilinear products y·W and N·W are replaced by the surrogates t and ω with
McCormick rows; W has a zero lower bound, so the lower envelope reduces to
t, ω >= 0 and is emitted as explicit rows only in the monolith for audit.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ModelConstructionError
from .models import SENTINEL_FLEET, DesignConfig
from .network import LinkKind, MultimodalNetwork, TransitLine
from .solver_kernel import Sense, SolverModel

logger = logging.getLogger(__name__)

WaitBounds = Mapping[Tuple[str, str], float]


def token(value: str) -> str:
    """Identifier safe for the model text format."""
    return "_".join(str(value).split())


def is_sentinel(fleet: float) -> bool:
    return abs(fleet - SENTINEL_FLEET) < 1e-12


def buses_required(line: TransitLine, frequency_per_hour: float) -> int:
    """Whole buses needed to run `line` at the given frequency: ceil(f · round trip / 60)."""
    if not line.links:
        raise ModelConstructionError(f"Line '{line.id}' has no transit links")
    return int(math.ceil(frequency_per_hour * 2.0 * line.one_way_time / 60.0 - 1e-9))


# --- Decisions ---

@dataclass(frozen=True)
class DesignDecision:
    """Open lines with their frequency (buses/hr) and the fleet deployed per zone."""

    frequencies: Mapping[str, float]
    fleets: Mapping[str, float]

    def is_open(self, line_id: str) -> bool:
        return line_id in self.frequencies

    def rate_per_minute(self, line_id: str) -> float:
        return self.frequencies.get(line_id, 0.0) / 60.0

    def fleet(self, zone: str) -> float:
        return self.fleets.get(zone, SENTINEL_FLEET)

    def key(self) -> Tuple[Tuple[Tuple[str, float], ...], Tuple[Tuple[str, float], ...]]:
        return tuple(sorted(self.frequencies.items())), tuple(sorted(self.fleets.items()))

    def describe(self) -> str:
        lines = ", ".join(f"{l}@{f:g}" for l, f in sorted(self.frequencies.items())) or "none"
        fleets = ", ".join(f"{z}:{n:g}" for z, n in sorted(self.fleets.items()) if not is_sentinel(n)) or "sentinel"
        return f"lines[{lines}] fleet[{fleets}]"


class DesignSpace:
    """Indexing of the design binaries shared by every model and cut."""

    def __init__(self, network: MultimodalNetwork, config: DesignConfig) -> None:
        self.network = network
        self.config = config
        self.lines: List[str] = sorted(network.lines)
        self.thetas: List[float] = list(config.theta_per_hour)
        self.zones: List[str] = list(network.zones)
        self.omegas: List[float] = list(config.omega)

        self.x_index: Dict[str, int] = {}
        self.y_index: Dict[Tuple[str, float], int] = {}
        self.n_index: Dict[Tuple[str, float], int] = {}
        self.names: List[str] = []
        for line in self.lines:
            self.x_index[line] = len(self.names)
            self.names.append(f"x[{token(line)}]")
        for line in self.lines:
            for f in self.thetas:
                self.y_index[(line, f)] = len(self.names)
                self.names.append(f"y[{token(line)},{f:g}]")
        for zone in self.zones:
            for n in self.omegas:
                self.n_index[(zone, n)] = len(self.names)
                self.names.append(f"N[{token(zone)},{n:g}]")
        self.bus_cost: Dict[Tuple[str, float], int] = {
            (line, f): buses_required(network.lines[line], f) for line in self.lines for f in self.thetas
        }

    @property
    def size(self) -> int:
        return len(self.names)

    def fleet_cost(self, n: float) -> float:
        """Vehicles counted against F̄; the sentinel level counts as zero."""
        return 0.0 if is_sentinel(n) else n

    def encode(self, decision: DesignDecision) -> np.ndarray:
        bits = np.zeros(self.size)
        for line, f in decision.frequencies.items():
            if (line, f) not in self.y_index:
                raise ModelConstructionError(f"Frequency {f} for line '{line}' is not in the menu")
            bits[self.x_index[line]] = 1.0
            bits[self.y_index[(line, f)]] = 1.0
        for zone in self.zones:
            n = decision.fleet(zone)
            if (zone, n) not in self.n_index:
                raise ModelConstructionError(f"Fleet {n} for zone '{zone}' is not in the menu")
            bits[self.n_index[(zone, n)]] = 1.0
        return bits

    def decode(self, bits: Sequence[float]) -> DesignDecision:
        frequencies = {line: f for (line, f), j in self.y_index.items() if bits[j] > 0.5}
        fleets = {zone: n for (zone, n), j in self.n_index.items() if bits[j] > 0.5}
        return DesignDecision(frequencies, fleets)

    def buses_used(self, decision: DesignDecision) -> int:
        return int(sum(self.bus_cost[(l, f)] for l, f in decision.frequencies.items()))

    def vehicles_used(self, decision: DesignDecision) -> float:
        return float(sum(self.fleet_cost(decision.fleet(z)) for z in self.zones))

    def violations(self, decision: DesignDecision) -> List[str]:
        """Budget and menu violations of `decision`; empty when feasible."""
        problems: List[str] = []
        for line, f in decision.frequencies.items():
            if (line, f) not in self.y_index:
                problems.append(f"line {line}: frequency {f} not in menu")
        for zone in self.zones:
            if (zone, decision.fleet(zone)) not in self.n_index:
                problems.append(f"zone {zone}: fleet {decision.fleet(zone)} not in menu")
        if problems:
            return problems
        if self.config.force_all_lines_open:
            closed = [l for l in self.lines if not decision.is_open(l)]
            if closed:
                problems.append(f"lines forced open but closed: {closed}")
        buses = self.buses_used(decision)
        if buses > self.config.bus_budget + 1e-9:
            problems.append(f"bus budget exceeded: {buses} > {self.config.bus_budget:g}")
        vehicles = self.vehicles_used(decision)
        if vehicles > self.config.fleet_budget + 1e-9:
            problems.append(f"fleet budget exceeded: {vehicles:g} > {self.config.fleet_budget:g}")
        return problems

    def is_feasible(self, decision: DesignDecision) -> bool:
        return not self.violations(decision)

    def all_closed(self) -> DesignDecision:
        """All lines closed and the sentinel fleet everywhere."""
        return DesignDecision({}, {zone: SENTINEL_FLEET for zone in self.zones})

    def random_design(self, rng: np.random.Generator) -> DesignDecision:
        """A random feasible design; lines and zones are visited in shuffled order against the budgets."""
        frequencies: Dict[str, float] = {}
        buses = 0
        forced = self.config.force_all_lines_open
        for line in rng.permutation(self.lines):
            options = [None] if not forced else []
            options += [f for f in self.thetas if buses + self.bus_cost[(line, f)] <= self.config.bus_budget]
            if not options:
                continue
            choice = options[int(rng.integers(len(options)))]
            if choice is not None:
                frequencies[str(line)] = choice
                buses += self.bus_cost[(str(line), choice)]
        fleets: Dict[str, float] = {}
        vehicles = 0.0
        for zone in rng.permutation(self.zones):
            options = [n for n in self.omegas if vehicles + self.fleet_cost(n) <= self.config.fleet_budget]
            n = options[int(rng.integers(len(options)))]
            fleets[str(zone)] = n
            vehicles += self.fleet_cost(n)
        return DesignDecision(frequencies, fleets)


def enumerate_feasible_designs(space: DesignSpace) -> Iterator[DesignDecision]:
    """Every feasible design, in a fixed order (full enumeration oracle for small instances)."""
    line_options: List[List[Optional[float]]] = []
    for _ in space.lines:
        opts: List[Optional[float]] = [] if space.config.force_all_lines_open else [None]
        line_options.append(opts + list(space.thetas))
    for line_choice in itertools.product(*line_options):
        frequencies = {l: f for l, f in zip(space.lines, line_choice) if f is not None}
        if sum(space.bus_cost[(l, f)] for l, f in frequencies.items()) > space.config.bus_budget + 1e-9:
            continue
        for fleet_choice in itertools.product(space.omegas, repeat=len(space.zones)):
            if sum(space.fleet_cost(n) for n in fleet_choice) > space.config.fleet_budget + 1e-9:
                continue
            yield DesignDecision(frequencies, dict(zip(space.zones, fleet_choice)))


# --- Design constraints ---

def add_design_variables(model: SolverModel, space: DesignSpace) -> List[int]:
    """Add x, y, N binaries and the linking/budget rows; returns model columns in space order."""
    cols = [model.add_var(name, 0.0, 1.0, 0.0, binary=True) for name in space.names]
    for line in space.lines:
        x = cols[space.x_index[line]]
        row = {cols[space.y_index[(line, f)]]: 1.0 for f in space.thetas}
        row[x] = -1.0
        model.add_constraint(row, Sense.EQ, 0.0, f"link[{token(line)}]")
        if space.config.force_all_lines_open:
            model.lb[x] = 1.0
    for zone in space.zones:
        model.add_constraint({cols[space.n_index[(zone, n)]]: 1.0 for n in space.omegas}, Sense.EQ, 1.0,
                             f"onefleet[{token(zone)}]")
    model.add_constraint({cols[j]: float(space.bus_cost[key]) for key, j in space.y_index.items()},
                         Sense.LE, space.config.bus_budget, "busbudget")
    model.add_constraint({cols[j]: space.fleet_cost(n) for (z, n), j in space.n_index.items()},
                         Sense.LE, space.config.fleet_budget, "fleetbudget")
    return cols


# --- Per-destination block ---

@dataclass
class AffineRhs:
    """Row right-hand side as constant + Σ coef · design bit."""

    constant: float
    terms: Dict[int, float] = field(default_factory=dict)

    def evaluate(self, bits: Sequence[float]) -> float:
        return self.constant + sum(c * bits[j] for j, c in self.terms.items())


@dataclass
class DestinationBlock:
    destination: str
    v: Dict[int, int] = field(default_factory=dict)                       # link idx -> column
    W: Dict[str, int] = field(default_factory=dict)                       # waiting node -> column
    t: Dict[Tuple[float, int, str], int] = field(default_factory=dict)    # (f, link idx, node) -> column
    w: Dict[Tuple[str, float], int] = field(default_factory=dict)         # (node, n) -> column
    rows: List[int] = field(default_factory=list)
    rhs: List[AffineRhs] = field(default_factory=list)


def _bound(wait_bounds: WaitBounds, node: str, destination: str) -> float:
    try:
        value = float(wait_bounds[(node, destination)])
    except KeyError as e:
        raise ModelConstructionError(f"Missing wait bound for node {node}, destination {destination}") from e
    if not math.isfinite(value) or value < 0:
        raise ModelConstructionError(f"Wait bound for ({node}, {destination}) must be finite and >= 0, got {value}")
    return value


def build_destination_block(
    model: SolverModel,
    network: MultimodalNetwork,
    space: DesignSpace,
    costs: np.ndarray,
    g: np.ndarray,
    destination: str,
    wait_bounds: WaitBounds,
    design_cols: Optional[Sequence[int]] = None,
    bits: Optional[Sequence[float]] = None,
    audit_rows: bool = False,
) -> DestinationBlock:
    """
    Add the linearized assignment block for one destination.

    Design-dependent right-hand sides are handled two ways: with design_cols
    the design terms move to the left-hand side as variables (monolith), with
    bits they are evaluated and the affine form is kept on the block for cut
    generation (subproblem).
    """
    if (design_cols is None) == (bits is None):
        raise ModelConstructionError("Pass exactly one of design_cols or bits")
    k = token(destination)
    block = DestinationBlock(destination)
    config = space.config

    def add_row(coefs: Dict[int, float], sense: Sense, rhs: AffineRhs, name: str) -> None:
        if design_cols is not None:
            row = dict(coefs)
            for j, c in rhs.terms.items():
                col = design_cols[j]
                row[col] = row.get(col, 0.0) - c
            r = model.add_constraint(row, sense, rhs.constant, name)
        else:
            r = model.add_constraint(coefs, sense, rhs.evaluate(bits), name)
        block.rows.append(r)
        block.rhs.append(rhs)

    for a, link in enumerate(network.links):
        block.v[a] = model.add_var(f"v[{token(link.id)},{k}]", 0.0, math.inf, float(costs[a]))
    for i in network.ordered_waiting_nodes:
        block.W[i] = model.add_var(f"W[{token(i)},{k}]", 0.0, math.inf, 1.0)

    for pos, i in enumerate(network.node_ids):
        coefs: Dict[int, float] = {}
        for a in network.fs(i):
            coefs[block.v[a]] = coefs.get(block.v[a], 0.0) + 1.0
        for a in network.bs(i):
            coefs[block.v[a]] = coefs.get(block.v[a], 0.0) - 1.0
        add_row(coefs, Sense.EQ, AffineRhs(float(g[pos])), f"flow[{token(i)},{k}]")

    for i in network.ordered_waiting_nodes:
        Wi = block.W[i]
        transit = network.service_departures(i, LinkKind.TRANSIT)
        road = network.service_departures(i, LinkKind.ROAD)
        bound = _bound(wait_bounds, i, destination) if (transit or road) else 0.0
        for a in transit:
            link = network.links[a]
            prop = {block.v[a]: 1.0}
            for f in space.thetas:
                tc = model.add_var(f"t[{f:g},{token(link.id)},{token(i)},{k}]")
                block.t[(f, a, i)] = tc
                prop[tc] = -f / 60.0
                y = space.y_index[(link.line, f)]
                tag = f"{f:g},{token(link.id)},{token(i)},{k}"
                add_row({Wi: 1.0, tc: -1.0}, Sense.LE, AffineRhs(bound, {y: -bound}), f"mcu1[{tag}]")
                add_row({tc: 1.0}, Sense.LE, AffineRhs(0.0, {y: bound}), f"mcu2[{tag}]")
                add_row({tc: 1.0, Wi: -1.0}, Sense.LE, AffineRhs(0.0), f"mcu3[{tag}]")
                if audit_rows:
                    add_row({tc: 1.0}, Sense.GE, AffineRhs(0.0), f"mcl[{tag}]")
            add_row(prop, Sense.LE, AffineRhs(0.0), f"ptr[{token(link.id)},{token(i)},{k}]")
        if road:
            zone = network.zone_of(i)
            matching = config.matching_for(zone)
            supply: Dict[int, float] = {}
            for n in space.omegas:
                wc = model.add_var(f"w[{token(i)},{n:g},{k}]")
                block.w[(i, n)] = wc
                supply[wc] = -matching * n
                nz = space.n_index[(zone, n)]
                tag = f"{token(i)},{n:g},{k}"
                add_row({Wi: 1.0, wc: -1.0}, Sense.LE, AffineRhs(bound, {nz: -bound}), f"mcw1[{tag}]")
                add_row({wc: 1.0}, Sense.LE, AffineRhs(0.0, {nz: bound}), f"mcw2[{tag}]")
                add_row({wc: 1.0, Wi: -1.0}, Sense.LE, AffineRhs(0.0), f"mcw3[{tag}]")
                if audit_rows:
                    add_row({wc: 1.0}, Sense.GE, AffineRhs(0.0), f"mwl[{tag}]")
            for a in road:
                row = dict(supply)
                row[block.v[a]] = 1.0
                add_row(row, Sense.LE, AffineRhs(0.0), f"prd[{token(network.links[a].id)},{token(i)},{k}]")
    return block


# --- Monolith ---

@dataclass
class DesignMilp:
    model: SolverModel
    space: DesignSpace
    design_cols: List[int]
    blocks: Dict[str, DestinationBlock]

    def decision(self, x: np.ndarray) -> DesignDecision:
        return self.space.decode([x[c] for c in self.design_cols])


def build_design_milp(
    network: MultimodalNetwork,
    config: DesignConfig,
    wait_bounds: WaitBounds,
    destinations: Optional[Sequence[str]] = None,
    space: Optional[DesignSpace] = None,
) -> DesignMilp:
    """
    The full design MILP: design binaries plus one linearized assignment block per destination.

    Args:
        network: Network with fares already attached.
        config: Design configuration (menus, budgets, value of time).
        wait_bounds: W̄ per (waiting node, destination).
        destinations: Destinations to include (served destinations by default).
    """
    space = space or DesignSpace(network, config)
    demand = network.served_demand()
    dests = list(destinations) if destinations is not None else demand.destinations
    costs = network.link_costs(config.value_of_time)
    model = SolverModel("design-milp")
    cols = add_design_variables(model, space)
    blocks = {
        k: build_destination_block(model, network, space, costs, network.g_vector(k, demand), k,
                                   wait_bounds, design_cols=cols, audit_rows=True)
        for k in dests
    }
    logger.info(f"Built design MILP: {model!r} over {len(dests)} destination(s).")
    return DesignMilp(model, space, cols, blocks)


# --- McCormick audit ---

@dataclass
class McCormickReport:
    checked: int = 0
    violations: List[Tuple[str, float, float]] = field(default_factory=list)   # (var name, expected, actual)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_violation(self) -> float:
        return max((abs(e - a) for _, e, a in self.violations), default=0.0)


def validate_mccormick_exactness(
    model: SolverModel,
    space: DesignSpace,
    blocks: Mapping[str, DestinationBlock],
    x: np.ndarray,
    bits: Sequence[float],
    tol: float = 1e-6,
) -> McCormickReport:
    """
    Check t = y·W and ω = N·W at an integral design.

    Args:
        model: Model holding the block columns.
        blocks: Destination blocks built into `model`.
        x: Solution vector of `model`.
        bits: Design bits the solution was produced at.
    """
    report = McCormickReport()
    if any(min(abs(b), abs(1 - b)) > tol for b in bits):
        raise ModelConstructionError("McCormick exactness is only defined at integral designs")
    network = space.network
    for block in blocks.values():
        for (f, a, i), col in block.t.items():
            y = round(bits[space.y_index[(network.links[a].line, f)]])
            expected = y * x[block.W[i]]
            report.checked += 1
            if abs(x[col] - expected) > tol * (1.0 + abs(expected)):
                report.violations.append((model.var_names[col], float(expected), float(x[col])))
        for (i, n), col in block.w.items():
            nz = round(bits[space.n_index[(network.zone_of(i), n)]])
            expected = nz * x[block.W[i]]
            report.checked += 1
            if abs(x[col] - expected) > tol * (1.0 + abs(expected)):
                report.violations.append((model.var_names[col], float(expected), float(x[col])))
    if report.violations:
        logger.warning(f"McCormick audit: {len(report.violations)} violation(s), max {report.max_violation:.3e}.")
    return report
