# modnet/benders.py
"""
Benders decomposition for the integrated design problem.

The subproblem is the linearized assignment at a fixed design, one LP per
destination. Design bits only enter row right-hand sides, so each
destination model is built once and re-solved with updated right-hand sides.
Optimality cuts come from the row duals: at any design the dual objective
Σ_r dual_r · rhs_r(bits) is a lower bound on that destination's cost and is
tight at the design that produced the duals.

Drivers:
    run_classic   single η, one aggregated cut per iteration.
    run_enhanced  η_k per destination, solution-pool multi-cuts, clique and
                  cover cuts, optional removal of non-active cuts.
    run_monolith  the full MILP solved by the kernel branch-and-bound.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from .assignment import estimate_wait_upper_bounds
from .cuts import CutPool, OptimalityCut, StaticCut, make_clique_cuts, make_cover_cuts, sum_cuts
from .design_model import (
    DesignDecision,
    DesignSpace,
    DestinationBlock,
    McCormickReport,
    WaitBounds,
    add_design_variables,
    build_design_milp,
    build_destination_block,
    token,
    validate_mccormick_exactness,
)
from .exceptions import (
    ModelConstructionError,
    NetworkDataError,
    SolverError,
    SolverLimitReached,
    SubproblemInfeasibleError,
)
from .models import BendersConfig, DesignConfig
from .network import MultimodalNetwork, check_road_connected
from .solver_kernel import LPResult, MILPResult, Sense, SolverModel, Status, solve_lp, solve_milp

logger = logging.getLogger(__name__)

DesignKey = Tuple[int, ...]


def design_key(bits: Sequence[float]) -> DesignKey:
    return tuple(int(round(b)) for b in bits)


def gap_percent(upper: float, lower: float) -> float:
    """(UB - LB)·100/UB, zero once the bounds meet."""
    if upper - lower <= 0:
        return 0.0
    if abs(upper) < 1e-12:
        return math.inf
    return (upper - lower) * 100.0 / abs(upper)


# --- Subproblem ---

@dataclass
class SubproblemDuals:
    """Row duals of one destination LP grouped by row family (flow, ptr, prd, mcu1..3, mcw1..3)."""

    destination: str
    families: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def family(self, name: str) -> Dict[str, float]:
        return self.families.get(name, {})


@dataclass
class DestinationOutcome:
    destination: str
    objective: float
    lp: LPResult
    cut: OptimalityCut
    duals: SubproblemDuals
    mccormick: McCormickReport


@dataclass
class SubproblemResult:
    design: DesignDecision
    bits: np.ndarray
    objective: float
    outcomes: Dict[str, DestinationOutcome]

    @property
    def key(self) -> DesignKey:
        return design_key(self.bits)

    def disaggregated_cuts(self) -> List[OptimalityCut]:
        return [o.cut for o in self.outcomes.values()]

    @property
    def mccormick_violations(self) -> int:
        return sum(len(o.mccormick.violations) for o in self.outcomes.values())


class Subproblem:
    """Per-destination linearized assignment LPs for a network, reused across designs."""

    def __init__(
        self,
        network: MultimodalNetwork,
        space: DesignSpace,
        wait_bounds: WaitBounds,
        destinations: Optional[Sequence[str]] = None,
        jobs: int = 1,
    ) -> None:
        self.network = network
        self.space = space
        self.wait_bounds = wait_bounds
        self.jobs = jobs
        self.demand = network.served_demand()
        self.destinations: List[str] = list(destinations) if destinations is not None else self.demand.destinations
        costs = network.link_costs(space.config.value_of_time)
        start_bits = space.encode(space.all_closed())
        self.models: Dict[str, SolverModel] = {}
        self.blocks: Dict[str, DestinationBlock] = {}
        for k in self.destinations:
            model = SolverModel(f"subproblem[{token(k)}]")
            self.blocks[k] = build_destination_block(
                model, network, space, costs, network.g_vector(k, self.demand), k, wait_bounds, bits=start_bits
            )
            self.models[k] = model
        logger.info(
            f"Subproblem ready: {len(self.destinations)} destination LP(s), "
            f"{sum(m.num_vars for m in self.models.values())} columns in total."
        )

    def _solve_destination(self, k: str, bits: np.ndarray, iteration: int) -> DestinationOutcome:
        model, block = self.models[k], self.blocks[k]
        for r, rhs in zip(block.rows, block.rhs):
            model.rhs[r] = rhs.evaluate(bits)
        lp = solve_lp(model)
        if lp.status == Status.INFEASIBLE:
            raise SubproblemInfeasibleError(
                "Subproblem infeasible at a feasible design; check road connectivity and the 0.01 fleet level",
                lp.status, k,
            )
        if lp.status != Status.OPTIMAL:
            raise SolverError(f"Subproblem LP ended with status {lp.status.value}", lp.status, k)
        cut = make_destination_cut(block, lp, k, iteration, design_key(bits))
        duals = SubproblemDuals(k)
        for r in block.rows:
            name = model.row_names[r]
            duals.families.setdefault(name.split("[", 1)[0], {})[name] = float(lp.duals[r])
        audit = validate_mccormick_exactness(model, self.space, {k: block}, lp.x, bits)
        logger.debug(f"Subproblem destination {k}: objective {lp.objective:.6f}.")
        return DestinationOutcome(k, lp.objective, lp, cut, duals, audit)

    def solve(self, design: DesignDecision, iteration: int = 0) -> SubproblemResult:
        """
        Solve every destination LP at `design`.

        Raises:
            SubproblemInfeasibleError: A destination LP is infeasible.
            SolverError: Any other non-optimal LP status.
        """
        bits = self.space.encode(design)
        if self.jobs > 1 and len(self.destinations) > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                outcomes = list(pool.map(lambda k: self._solve_destination(k, bits, iteration), self.destinations))
        else:
            outcomes = [self._solve_destination(k, bits, iteration) for k in self.destinations]
        by_dest = {o.destination: o for o in outcomes}
        objective = float(sum(o.objective for o in outcomes))
        return SubproblemResult(design, bits, objective, by_dest)


def make_destination_cut(
    block: DestinationBlock, lp: LPResult, destination: Optional[str], iteration: int = 0,
    key: Optional[DesignKey] = None,
) -> OptimalityCut:
    """η_k >= Σ_r dual_r · (constant_r + Σ coef·bit). Bound terms vanish: every column has lower bound 0 and no upper bound."""
    constant = 0.0
    coefs: Dict[int, float] = {}
    for r, rhs in zip(block.rows, block.rhs):
        dual = float(lp.duals[r])
        if dual == 0.0:
            continue
        constant += dual * rhs.constant
        for j, c in rhs.terms.items():
            coefs[j] = coefs.get(j, 0.0) + dual * c
    return OptimalityCut(destination, constant, coefs, iteration, key)


def make_disaggregated_cuts(result: SubproblemResult) -> List[OptimalityCut]:
    """One optimality cut per destination."""
    return result.disaggregated_cuts()


def make_classic_cut(result: SubproblemResult) -> OptimalityCut:
    """The aggregated cut: the coefficient-wise sum of the per-destination cuts."""
    total = sum_cuts(make_disaggregated_cuts(result))
    iteration = next(iter(result.outcomes.values())).cut.iteration if result.outcomes else 0
    return OptimalityCut(None, total.constant, total.coefs, iteration, result.key)


def solve_subproblem(
    network: MultimodalNetwork, config: DesignConfig, design: DesignDecision,
    wait_bounds: Optional[WaitBounds] = None, jobs: int = 1,
) -> SubproblemResult:
    """One-shot subproblem solve at `design` (wait bounds estimated when not given)."""
    space = DesignSpace(network, config)
    bounds = wait_bounds if wait_bounds is not None else estimate_wait_upper_bounds(network, config, space)
    return Subproblem(network, space, bounds, jobs=jobs).solve(design)


# --- Master ---

@dataclass
class Master:
    model: SolverModel
    design_cols: List[int]
    eta_cols: Dict[Optional[str], int]
    cut_rows: Dict[int, Tuple]


def build_master(
    space: DesignSpace,
    destinations: Sequence[str],
    pool: CutPool,
    disaggregated: bool,
) -> Master:
    model = SolverModel("master")
    cols = add_design_variables(model, space)
    if disaggregated:
        eta_cols: Dict[Optional[str], int] = {k: model.add_var(f"eta[{token(k)}]", 0.0, math.inf, 1.0) for k in destinations}
    else:
        eta_cols = {None: model.add_var("eta", 0.0, math.inf, 1.0)}
    for cut in pool.static:
        model.add_constraint({cols[j]: 1.0 for j in cut.members}, Sense.LE, cut.rhs, cut.label)
    cut_rows: Dict[int, Tuple] = {}
    for index, cut in enumerate(pool.cuts()):
        if cut.scope not in eta_cols:
            raise ModelConstructionError(f"Cut scope '{cut.scope}' has no η column in this master")
        row = {cols[j]: -c for j, c in cut.coefs.items()}
        row[eta_cols[cut.scope]] = 1.0
        cut_rows[model.add_constraint(row, Sense.GE, cut.constant, cut.name(index))] = cut.key()
    return Master(model, cols, eta_cols, cut_rows)


def cut_activity(master: Master, bits: Sequence[float]) -> Dict[Tuple, float]:
    """Duals of the cut rows in the master LP with every binary fixed at `bits`."""
    lb, ub = list(master.model.lb), list(master.model.ub)
    for j, col in enumerate(master.design_cols):
        lb[col] = ub[col] = float(round(bits[j]))
    lp = solve_lp(master.model, lb, ub)
    if lp.status != Status.OPTIMAL:
        logger.warning(f"Fixed-design master LP ended with {lp.status.value}; cut activity not updated.")
        return {}
    return {key: float(lp.duals[row]) for row, key in master.cut_rows.items()}


# --- Run record ---

@dataclass
class TraceRow:
    iteration: int
    lower_bound: float
    upper_bound: float
    upper_bound_raw: float
    gap_pct: float
    cuts_added: int
    cuts_active: int
    designs_evaluated: int
    wall_time: float


TRACE_COLUMNS = [
    "iteration", "lower_bound", "upper_bound", "upper_bound_raw", "gap_pct",
    "cuts_added", "cuts_active", "designs_evaluated", "wall_time",
]


@dataclass
class BendersRun:
    method: str
    status: str
    lower_bound: float
    upper_bound: float
    incumbent: Optional[DesignDecision]
    incumbent_bits: Optional[np.ndarray]
    iterations: int
    wall_time: float
    trace: List[TraceRow] = field(default_factory=list)
    cuts: List[OptimalityCut] = field(default_factory=list)
    static_cuts: List[StaticCut] = field(default_factory=list)
    evaluated: Dict[DesignKey, float] = field(default_factory=dict)
    removed_cut_keys: List[Tuple] = field(default_factory=list)
    mccormick_checked: int = 0
    mccormick_violations: int = 0
    wait_bounds: Optional[WaitBounds] = None

    @property
    def gap_pct(self) -> float:
        return gap_percent(self.upper_bound, self.lower_bound)

    @property
    def converged(self) -> bool:
        return self.status == "optimal"

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.__dict__ for row in self.trace], columns=TRACE_COLUMNS)

    def write_trace(self, path: Union[str, Path]) -> None:
        self.trace_frame().to_csv(path, index=False, float_format="%.10g")
        logger.info(f"Wrote {len(self.trace)} trace row(s) to {path}.")


# --- Drivers ---

def _prepare(
    network: MultimodalNetwork,
    design_config: DesignConfig,
    wait_bounds: Optional[WaitBounds],
    require_road: bool,
    jobs: int,
) -> Tuple[DesignSpace, WaitBounds]:
    if require_road and not check_road_connected(network):
        raise NetworkDataError(
            "Road and walking links do not connect every origin and road node to every destination; "
            "the 0.01 fleet level cannot guarantee a feasible subproblem"
        )
    space = DesignSpace(network, design_config)
    bounds = wait_bounds if wait_bounds is not None else estimate_wait_upper_bounds(network, design_config, space, jobs=jobs)
    return space, bounds


def run_benders(
    network: MultimodalNetwork,
    design_config: DesignConfig,
    config: BendersConfig,
    wait_bounds: Optional[WaitBounds] = None,
    require_road: bool = True,
) -> BendersRun:
    """
    Benders loop honoring every toggle of `config`.

    Each iteration evaluates the pending designs (one, or the master's
    solution pool), adds their cuts, then re-solves the master. LB is the
    best master bound so far, UB the best evaluated design.
    """
    started = time.monotonic()
    space, bounds = _prepare(network, design_config, wait_bounds, require_road, config.jobs)
    subproblem = Subproblem(network, space, bounds, jobs=config.jobs)
    dests = subproblem.destinations
    pool = CutPool()
    if config.clique_cover:
        pool.static = make_clique_cuts(space) + make_cover_cuts(space)

    evaluated: Dict[DesignKey, float] = {}
    designs_by_key: Dict[DesignKey, DesignDecision] = {}
    cuts_by_design: Dict[DesignKey, List[OptimalityCut]] = {}
    best_key: Optional[DesignKey] = None
    upper = math.inf
    lower = -math.inf
    run = BendersRun(config.method, "running", lower, upper, None, None, 0, 0.0,
                     static_cuts=list(pool.static), wait_bounds=bounds)

    initial = space.all_closed()
    if space.is_feasible(initial):
        pending = [initial]
    else:
        master0 = build_master(space, dests, pool, config.disaggregated)
        first = solve_milp(master0.model)
        if not first.has_solution:
            raise SolverError(f"No feasible design satisfies the budgets (master status {first.status.value})", first.status)
        pending = [space.decode([first.x[c] for c in master0.design_cols])]
    logger.info(f"Benders ({config.method}) starting from design {pending[0].describe()}.")

    iteration = 0
    status = "optimal"
    while True:
        iteration += 1
        added = 0
        raw_upper = math.nan
        for s, design in enumerate(pending):
            bits = space.encode(design)
            key = design_key(bits)
            if key in evaluated:
                if s == 0:
                    raw_upper = evaluated[key]
                # archived cuts of a revisited design come back from the pool archive
                added += sum(1 for cut in cuts_by_design[key] if pool.add(cut))
                continue
            result = subproblem.solve(design, iteration)
            evaluated[key] = result.objective
            designs_by_key[key] = design
            run.mccormick_checked += sum(o.mccormick.checked for o in result.outcomes.values())
            run.mccormick_violations += result.mccormick_violations
            if s == 0:
                raw_upper = result.objective
            if result.objective < upper:
                upper, best_key = result.objective, key
            new_cuts = make_disaggregated_cuts(result) if config.disaggregated else [make_classic_cut(result)]
            cuts_by_design[key] = new_cuts
            added += sum(1 for cut in new_cuts if pool.add(cut))

        elapsed = time.monotonic() - started
        remaining = None if config.time_limit is None else max(config.time_limit - elapsed, 0.0)
        master = build_master(space, dests, pool, config.disaggregated)
        result_m = solve_milp(master.model, pool_size=config.pool_size, pool_gap=config.pool_gap, time_limit=remaining)
        if not result_m.has_solution:
            if result_m.status != Status.TIME_LIMIT or best_key is None:
                raise SolverError(f"Master problem ended with status {result_m.status.value}", result_m.status)
            lower = max(lower, result_m.bound)
            gap = gap_percent(upper, lower)
            wall = time.monotonic() - started
            run.trace.append(TraceRow(iteration, lower, upper, raw_upper, gap, added, len(pool), len(evaluated), wall))
            logger.warning(f"Master stopped on its time limit without a solution; keeping UB={upper:.6f}.")
            status = "time_limit"
            break
        lower = max(lower, result_m.bound)
        gap = gap_percent(upper, lower)

        if config.cut_cleanup and len(pool):
            master_bits = [result_m.x[c] for c in master.design_cols]
            pool.record_duals(cut_activity(master, master_bits))
            protected = {cut.key() for cut in pool.cuts() if cut.design_key == best_key}
            run.removed_cut_keys.extend(cut.key() for cut in pool.cleanup(config.cleanup_after, protected))

        pending = [space.decode([sol.x[c] for c in master.design_cols]) for sol in result_m.pool]
        wall = time.monotonic() - started
        run.trace.append(TraceRow(iteration, lower, upper, raw_upper, gap, added, len(pool), len(evaluated), wall))
        logger.info(
            f"Iteration {iteration}: LB={lower:.6f} UB={upper:.6f} gap={gap:.6f}% "
            f"cuts+{added} (active {len(pool)}) designs={len(evaluated)}."
        )

        if upper - lower <= config.epsilon or (upper > 0 and (upper - lower) / upper <= config.relative_gap):
            break
        if result_m.status == Status.TIME_LIMIT or (config.time_limit is not None and wall >= config.time_limit):
            status = "time_limit"
            break
        if iteration >= config.max_iterations:
            status = "iteration_limit"
            break
        if all(
            design_key(space.encode(d)) in evaluated
            and all(c.key() in pool.active for c in cuts_by_design[design_key(space.encode(d))])
            for d in pending
        ):
            logger.warning("Master repeated already evaluated designs without closing the gap; stopping.")
            status = "stalled"
            break

    run.status = status
    run.lower_bound, run.upper_bound = lower, upper
    run.iterations = iteration
    run.wall_time = time.monotonic() - started
    run.cuts = list(pool.history)
    run.evaluated = evaluated
    if best_key is not None:
        run.incumbent = designs_by_key[best_key]
        run.incumbent_bits = np.array(best_key, dtype=float)
    logger.info(
        f"Benders ({config.method}) finished: status={status}, UB={upper:.6f}, LB={lower:.6f}, "
        f"gap={run.gap_pct:.6f}%, iterations={iteration}, wall={run.wall_time:.2f}s."
    )
    return run


def run_classic(
    network: MultimodalNetwork, design_config: DesignConfig, config: Optional[BendersConfig] = None,
    wait_bounds: Optional[WaitBounds] = None, require_road: bool = True,
) -> BendersRun:
    """Single aggregated η, one cut per iteration, no acceleration."""
    base = config or BendersConfig()
    classic = base.model_copy(update={
        "method": "classic", "disaggregated": False, "multiple_solutions": 0,
        "clique_cover": False, "cut_cleanup": False,
    })
    return run_benders(network, design_config, classic, wait_bounds, require_road)


def run_enhanced(
    network: MultimodalNetwork, design_config: DesignConfig, config: Optional[BendersConfig] = None,
    wait_bounds: Optional[WaitBounds] = None, require_road: bool = True,
) -> BendersRun:
    """Benders with the toggles of `config` (disaggregated cuts, pool multi-cuts, clique/cover, cleanup)."""
    base = config or BendersConfig()
    return run_benders(network, design_config, base.model_copy(update={"method": "enhanced"}), wait_bounds, require_road)


def _monolith_fallback(
    network: MultimodalNetwork, space: DesignSpace, bounds: WaitBounds, config: BendersConfig,
    result: MILPResult, started: float,
) -> BendersRun:
    """Incumbent for a MILP stopped before its first integral solution: the all-closed design."""
    decision = space.all_closed()
    if not space.is_feasible(decision):
        raise SolverLimitReached(
            f"Design MILP stopped on {result.status.value} before finding a feasible design", result
        )
    evaluated = Subproblem(network, space, bounds, jobs=config.jobs).solve(decision)
    bits = space.encode(decision)
    upper = evaluated.objective
    lower = min(result.bound, upper)
    wall = time.monotonic() - started
    gap = gap_percent(upper, lower)
    logger.warning(f"Monolith stopped on {result.status.value} without a solution; all-closed design UB={upper:.6f}.")
    return BendersRun(
        "monolith", result.status.value, lower, upper, decision, bits, 1, wall,
        trace=[TraceRow(1, lower, upper, upper, gap, 0, 0, 1, wall)],
        evaluated={design_key(bits): upper},
        mccormick_checked=sum(o.mccormick.checked for o in evaluated.outcomes.values()),
        mccormick_violations=evaluated.mccormick_violations, wait_bounds=bounds,
    )


def run_monolith(
    network: MultimodalNetwork, design_config: DesignConfig, config: Optional[BendersConfig] = None,
    wait_bounds: Optional[WaitBounds] = None, require_road: bool = True,
) -> BendersRun:
    """Solve the full linearized MILP with the kernel branch-and-bound."""
    config = config or BendersConfig(method="monolith")
    started = time.monotonic()
    space, bounds = _prepare(network, design_config, wait_bounds, require_road, config.jobs)
    milp = build_design_milp(network, design_config, bounds, space=space)
    remaining = None if config.time_limit is None else max(config.time_limit - (time.monotonic() - started), 0.0)
    result = solve_milp(milp.model, time_limit=remaining)
    if not result.has_solution:
        if result.status != Status.TIME_LIMIT:
            raise SolverError(f"Design MILP ended with status {result.status.value}", result.status)
        return _monolith_fallback(network, space, bounds, config, result, started)
    decision = milp.decision(result.x)
    bits = space.encode(decision)
    audit = validate_mccormick_exactness(milp.model, space, milp.blocks, result.x, bits)
    wall = time.monotonic() - started
    status = "optimal" if result.status == Status.OPTIMAL else result.status.value
    gap = gap_percent(result.objective, result.bound)
    run = BendersRun(
        "monolith", status, result.bound, result.objective, decision, bits, 1, wall,
        trace=[TraceRow(1, result.bound, result.objective, result.objective, gap, 0, 0, 1, wall)],
        evaluated={design_key(bits): result.objective},
        mccormick_checked=audit.checked, mccormick_violations=len(audit.violations), wait_bounds=bounds,
    )
    logger.info(f"Monolith finished: status={status}, objective={result.objective:.6f}, nodes={result.nodes}.")
    return run


def run_method(
    network: MultimodalNetwork, design_config: DesignConfig, config: BendersConfig,
    wait_bounds: Optional[WaitBounds] = None, require_road: bool = True,
) -> BendersRun:
    drivers = {"classic": run_classic, "enhanced": run_enhanced, "monolith": run_monolith}
    return drivers[config.method](network, design_config, config, wait_bounds, require_road)


def protected_keys(run: BendersRun) -> Set[Tuple]:
    """Keys of cuts generated at the final incumbent."""
    if run.incumbent_bits is None:
        return set()
    key = design_key(run.incumbent_bits)
    return {cut.key() for cut in run.cuts if cut.design_key == key}
