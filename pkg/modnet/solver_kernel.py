# modnet/solver_kernel.py
"""
LP/MILP kernel shared by the assignment, design and decomposition modules.

SolverModel is a row-wise builder for `min c·x + c0` with bounded variables
and <=, >=, = rows. solve_lp hands the model to the HiGHS dual simplex (via
scipy.optimize.linprog) and returns primal values, row duals and reduced
costs. solve_milp runs a branch-and-bound over the binary variables on top
of solve_lp and keeps a pool of distinct integral solutions.

Dual convention: every dual is the derivative of the optimal objective with
respect to the row right-hand side (reduced costs: with respect to the
active bound). Hence <= rows have duals <= 0, >= rows duals >= 0, and
c = Aᵀy + r holds at optimality.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .exceptions import ModelConstructionError

logger = logging.getLogger(__name__)

PRIMAL_TOL = 1e-7
DUAL_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
RESTART_EVERY = 1000
FORMAT_HEADER = "# modnet-model v1"


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"
    # B&B finished but dropped nodes whose LP failed; the bound keeps their parent bounds.
    INCOMPLETE = "incomplete"
    ERROR = "error"


_LINPROG_STATUS = {
    0: Status.OPTIMAL,
    1: Status.TIME_LIMIT,
    2: Status.INFEASIBLE,
    3: Status.UNBOUNDED,
    4: Status.ERROR,
}


# --- Model ---

class SolverModel:
    """Minimization model built one variable and one row at a time."""

    def __init__(self, name: str = "model") -> None:
        self.name = name
        self.var_names: List[str] = []
        self.lb: List[float] = []
        self.ub: List[float] = []
        self.obj: List[float] = []
        self.integer: List[bool] = []
        self.objective_constant = 0.0
        self.row_names: List[str] = []
        self.senses: List[Sense] = []
        self.rhs: List[float] = []
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._vals: List[float] = []
        self._var_lookup: Dict[str, int] = {}
        self._row_lookup: Dict[str, int] = {}
        self._matrix: Optional[sparse.csr_matrix] = None

    # --- Building ---

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.row_names)

    def add_var(
        self, name: str, lb: float = 0.0, ub: float = math.inf, obj: float = 0.0, binary: bool = False
    ) -> int:
        if name in self._var_lookup:
            raise ModelConstructionError(f"Duplicate variable name '{name}' in model '{self.name}'")
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelConstructionError(f"Variable '{name}' has lb {lb} > ub {ub}")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integer.append(binary)
        self._var_lookup[name] = idx
        return idx

    def add_constraint(
        self, coefs: Mapping[int, float], sense: Union[Sense, str], rhs: float, name: Optional[str] = None
    ) -> int:
        """Append row Σ coefs[j]·x_j (sense) rhs; zero coefficients are dropped."""
        row = len(self.row_names)
        name = name or f"r{row}"
        if name in self._row_lookup:
            raise ModelConstructionError(f"Duplicate row name '{name}' in model '{self.name}'")
        for col, val in coefs.items():
            if not 0 <= col < self.num_vars:
                raise ModelConstructionError(f"Row '{name}' references unknown column {col}")
            if val != 0.0:
                self._rows.append(row)
                self._cols.append(col)
                self._vals.append(float(val))
        self.row_names.append(name)
        self.senses.append(Sense(sense))
        self.rhs.append(float(rhs))
        self._row_lookup[name] = row
        self._matrix = None
        return row

    def var(self, name: str) -> int:
        return self._var_lookup[name]

    def row(self, name: str) -> int:
        return self._row_lookup[name]

    def has_var(self, name: str) -> bool:
        return name in self._var_lookup

    @property
    def binaries(self) -> List[int]:
        return [j for j, flag in enumerate(self.integer) if flag]

    def matrix(self) -> sparse.csr_matrix:
        if self._matrix is None:
            # coo -> csr sums duplicate entries
            self._matrix = sparse.coo_matrix(
                (self._vals, (self._rows, self._cols)), shape=(self.num_rows, self.num_vars)
            ).tocsr()
        return self._matrix

    def row_coefficients(self, row: int) -> Dict[int, float]:
        m = self.matrix()
        start, end = m.indptr[row], m.indptr[row + 1]
        return {int(c): float(v) for c, v in zip(m.indices[start:end], m.data[start:end])}

    def copy(self, name: Optional[str] = None) -> "SolverModel":
        other = SolverModel(name or self.name)
        other.var_names = list(self.var_names)
        other.lb, other.ub, other.obj = list(self.lb), list(self.ub), list(self.obj)
        other.integer = list(self.integer)
        other.objective_constant = self.objective_constant
        other.row_names, other.senses, other.rhs = list(self.row_names), list(self.senses), list(self.rhs)
        other._rows, other._cols, other._vals = list(self._rows), list(self._cols), list(self._vals)
        other._var_lookup, other._row_lookup = dict(self._var_lookup), dict(self._row_lookup)
        return other

    def relaxed(self) -> "SolverModel":
        other = self.copy(f"{self.name}-relaxed")
        other.integer = [False] * self.num_vars
        return other

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(self.obj, x) + self.objective_constant)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest row or bound violation of x (0 when feasible)."""
        worst = 0.0
        if self.num_rows:
            activity = self.matrix() @ x
            for r, (sense, rhs) in enumerate(zip(self.senses, self.rhs)):
                diff = activity[r] - rhs
                if sense == Sense.LE:
                    worst = max(worst, diff)
                elif sense == Sense.GE:
                    worst = max(worst, -diff)
                else:
                    worst = max(worst, abs(diff))
        lb, ub = np.array(self.lb), np.array(self.ub)
        worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        return float(worst)

    def __repr__(self) -> str:
        return (
            f"SolverModel(name={self.name!r}, vars={self.num_vars}, rows={self.num_rows}, "
            f"binaries={len(self.binaries)})"
        )


# --- Results ---

@dataclass
class LPResult:
    status: Status
    x: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


@dataclass
class PoolSolution:
    x: np.ndarray
    objective: float

    def key(self, binaries: Sequence[int]) -> Tuple[int, ...]:
        return tuple(int(round(self.x[j])) for j in binaries)


@dataclass
class MILPResult:
    status: Status
    x: Optional[np.ndarray]
    objective: float
    bound: float
    gap: float
    pool: List[PoolSolution] = field(default_factory=list)
    nodes: int = 0

    @property
    def has_solution(self) -> bool:
        return self.x is not None


# --- LP ---

def _bounds(lb: Sequence[float], ub: Sequence[float]) -> List[Tuple[Optional[float], Optional[float]]]:
    return [
        (None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
        for lo, hi in zip(lb, ub)
    ]


def solve_lp(
    model: SolverModel,
    lb: Optional[Sequence[float]] = None,
    ub: Optional[Sequence[float]] = None,
    time_limit: Optional[float] = None,
) -> LPResult:
    """
    Solve the continuous relaxation of `model` (integrality ignored).

    Args:
        model: The model to solve.
        lb, ub: Optional bound overrides (same length as the variables).
        time_limit: Seconds handed to HiGHS.

    Returns:
        LPResult; non-optimal outcomes carry an explicit status and NaN vectors.
    """
    n, m = model.num_vars, model.num_rows
    lower = list(model.lb if lb is None else lb)
    upper = list(model.ub if ub is None else ub)
    if n == 0:
        return LPResult(Status.OPTIMAL, np.zeros(0), model.objective_constant, np.zeros(m), np.zeros(0))
    if any(lo > hi + PRIMAL_TOL for lo, hi in zip(lower, upper)):
        nan = np.full(n, np.nan)
        return LPResult(Status.INFEASIBLE, nan, math.nan, np.full(m, np.nan), nan, "crossed bounds")

    A = model.matrix()
    senses = np.array([s.value for s in model.senses], dtype=object)
    rhs = np.asarray(model.rhs, dtype=float)
    eq = np.flatnonzero(senses == Sense.EQ.value)
    le = np.flatnonzero(senses == Sense.LE.value)
    ge = np.flatnonzero(senses == Sense.GE.value)
    ineq = np.concatenate([le, ge])
    sign = np.concatenate([np.ones(len(le)), -np.ones(len(ge))])

    A_ub = sparse.diags(sign) @ A[ineq] if len(ineq) else None
    b_ub = sign * rhs[ineq] if len(ineq) else None
    A_eq = A[eq] if len(eq) else None
    b_eq = rhs[eq] if len(eq) else None

    options: Dict[str, object] = {
        "primal_feasibility_tolerance": PRIMAL_TOL,
        "dual_feasibility_tolerance": DUAL_TOL,
    }
    if time_limit is not None:
        options["time_limit"] = max(float(time_limit), 1e-3)

    def run(opts: Dict[str, object]):
        return linprog(
            np.asarray(model.obj, dtype=float),
            A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
            bounds=_bounds(lower, upper), method="highs-ds", options=opts,
        )

    res = run(options)
    if res.status == 4 and "infeasible" in str(res.message).lower():
        # presolve can only say "unbounded or infeasible"; the plain simplex decides
        res = run({**options, "presolve": False})
    status = _LINPROG_STATUS.get(res.status, Status.ERROR)
    if status != Status.OPTIMAL:
        logger.debug(f"LP '{model.name}' ended with status {status.value}: {res.message}")
        nan = np.full(n, np.nan)
        return LPResult(status, nan, math.nan, np.full(m, np.nan), nan, str(res.message))

    duals = np.zeros(m)
    if len(eq):
        duals[eq] = res.eqlin.marginals
    if len(ineq):
        duals[ineq] = sign * res.ineqlin.marginals
    reduced = np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals)
    objective = float(res.fun) + model.objective_constant
    return LPResult(Status.OPTIMAL, np.asarray(res.x, dtype=float), objective, duals, reduced, str(res.message))


def dual_residual(model: SolverModel, result: LPResult) -> float:
    """max |c - Aᵀy - r|, the stationarity residual of an optimal LP result."""
    c = np.asarray(model.obj, dtype=float)
    if model.num_rows:
        c = c - model.matrix().T @ result.duals
    return float(np.max(np.abs(c - result.reduced_costs), initial=0.0))


def dual_sign_violation(model: SolverModel, result: LPResult) -> float:
    """Largest dual of the wrong sign for its row sense."""
    worst = 0.0
    for sense, y in zip(model.senses, result.duals):
        if sense == Sense.LE:
            worst = max(worst, y)
        elif sense == Sense.GE:
            worst = max(worst, -y)
    return float(worst)


# --- MILP ---

@dataclass
class _Node:
    bound: float
    seq: int
    fixings: Tuple[Tuple[int, int], ...]


def _most_fractional(x: np.ndarray, candidates: Sequence[int]) -> Optional[int]:
    best_j, best_dist = None, 0.5
    for j in candidates:
        frac = x[j] - math.floor(x[j])
        if frac < INTEGRALITY_TOL or frac > 1 - INTEGRALITY_TOL:
            continue
        dist = abs(frac - 0.5)
        if dist < best_dist - 1e-12:
            best_j, best_dist = j, dist
    return best_j


def solve_milp(
    model: SolverModel,
    pool_size: int = 1,
    pool_gap: float = 0.0,
    time_limit: Optional[float] = None,
    node_limit: Optional[int] = None,
) -> MILPResult:
    """
    Branch-and-bound over the binary variables of `model`.

    Most-fractional branching (lowest index on ties), depth-first with a
    best-bound restart every RESTART_EVERY nodes. With pool_size > 1 the
    search keeps up to pool_size distinct integral solutions whose objective
    is within pool_gap (relative) of the incumbent, best first.

    Returns:
        MILPResult with the incumbent, a monotone global bound and
        gap = (incumbent - bound) / max(|incumbent|, 1e-10). Status INCOMPLETE
        means a node LP failed and the node was dropped; the bound then
        stays at or below that node's parent bound.
    """
    binaries = model.binaries
    for j in binaries:
        if model.lb[j] < 0 or model.ub[j] > 1:
            raise ModelConstructionError(f"Integer variable '{model.var_names[j]}' is not binary")
    started = time.monotonic()
    pool: Dict[Tuple[int, ...], PoolSolution] = {}
    open_nodes: List[_Node] = [_Node(-math.inf, 0, ())]
    seq = 0
    processed = 0
    global_bound = -math.inf
    dropped: List[float] = []
    status = Status.OPTIMAL

    def incumbent() -> Optional[PoolSolution]:
        return min(pool.values(), key=lambda s: s.objective) if pool else None

    def cutoff() -> float:
        best = incumbent()
        if best is None:
            return math.inf
        limit = best.objective + pool_gap * max(abs(best.objective), 1e-10) if pool_size > 1 else best.objective
        if len(pool) >= pool_size:
            limit = min(limit, max(s.objective for s in pool.values()))
        return limit

    def offer(x: np.ndarray, objective: float) -> None:
        sol = PoolSolution(x.copy(), objective)
        for j in binaries:
            sol.x[j] = float(round(sol.x[j]))
        key = sol.key(binaries)
        if key in pool and pool[key].objective <= objective:
            return
        pool[key] = sol
        best = incumbent()
        assert best is not None
        keep = sorted(
            (s for s in pool.values()
             if s.objective <= best.objective + pool_gap * max(abs(best.objective), 1e-10) + 1e-12
             or s is best),
            key=lambda s: (s.objective, s.key(binaries)),
        )[:pool_size]
        pool.clear()
        pool.update({s.key(binaries): s for s in keep})
        logger.debug(f"B&B '{model.name}': integral solution {objective:.6f} (pool {len(pool)}).")

    while open_nodes:
        if time_limit is not None and time.monotonic() - started >= time_limit:
            status = Status.TIME_LIMIT
            break
        if node_limit is not None and processed >= node_limit:
            status = Status.NODE_LIMIT
            break
        if processed and processed % RESTART_EVERY == 0:
            open_nodes.sort(key=lambda nd: (-nd.bound, -nd.seq))
        node = open_nodes.pop()
        processed += 1
        if node.bound >= cutoff() - 1e-9 and pool_size == 1 and pool:
            continue
        if node.bound > cutoff() + 1e-9:
            continue

        lower, upper = list(model.lb), list(model.ub)
        for j, v in node.fixings:
            lower[j] = upper[j] = float(v)
        remaining = None
        if time_limit is not None:
            remaining = time_limit - (time.monotonic() - started)
        lp = solve_lp(model, lower, upper, time_limit=remaining)
        if lp.status == Status.INFEASIBLE:
            continue
        if lp.status == Status.UNBOUNDED:
            if not pool and processed == 1:
                return MILPResult(Status.UNBOUNDED, None, -math.inf, -math.inf, math.inf, [], processed)
            continue
        if lp.status != Status.OPTIMAL:
            if lp.status == Status.TIME_LIMIT:
                open_nodes.append(node)
                status = Status.TIME_LIMIT
                break
            dropped.append(node.bound)
            logger.warning(
                f"B&B '{model.name}': node LP returned {lp.status.value}; node dropped, "
                f"its parent bound {node.bound:.6f} stays in the global bound."
            )
            continue
        if processed == 1:
            global_bound = lp.objective
        if lp.objective > cutoff() + 1e-9 or (pool_size == 1 and pool and lp.objective >= cutoff() - 1e-9):
            continue

        fixed = {j for j, _ in node.fixings}
        branch_var = _most_fractional(lp.x, binaries)
        if branch_var is None:
            offer(lp.x, lp.objective)
            if pool_size > 1:
                # Partition the rest of this subtree around the integral point.
                prefix: List[Tuple[int, int]] = []
                children: List[_Node] = []
                for j in binaries:
                    if j in fixed:
                        continue
                    value = int(round(lp.x[j]))
                    seq += 1
                    children.append(_Node(lp.objective, seq, node.fixings + tuple(prefix) + ((j, 1 - value),)))
                    prefix.append((j, value))
                open_nodes.extend(reversed(children))
            continue

        up_first = lp.x[branch_var] >= 0.5
        seq += 1
        down = _Node(lp.objective, seq, node.fixings + ((branch_var, 0),))
        seq += 1
        up = _Node(lp.objective, seq, node.fixings + ((branch_var, 1),))
        open_nodes.extend([down, up] if up_first else [up, down])

    best = incumbent()
    if dropped and status == Status.OPTIMAL:
        status = Status.INCOMPLETE
    unexplored = [nd.bound for nd in open_nodes] if status != Status.OPTIMAL else []
    unexplored += dropped
    if unexplored:
        global_bound = max(global_bound, min(unexplored))
    elif best is not None:
        global_bound = best.objective
    if best is None:
        if status == Status.OPTIMAL:
            status = Status.INFEASIBLE
        return MILPResult(status, None, math.inf, global_bound, math.inf, [], processed)
    global_bound = min(global_bound, best.objective)
    gap = (best.objective - global_bound) / max(abs(best.objective), 1e-10)
    ordered = sorted(pool.values(), key=lambda s: (s.objective, s.key(binaries)))
    logger.debug(
        f"B&B '{model.name}' finished: status={status.value}, obj={best.objective:.6f}, "
        f"bound={global_bound:.6f}, nodes={processed}, pool={len(ordered)}."
    )
    return MILPResult(status, best.x, best.objective, global_bound, max(gap, 0.0), ordered, processed)


# --- Text format ---

def write_model(model: SolverModel, path: Union[str, Path]) -> None:
    """
    Write `model` as plain text, one variable or constraint per line:

        var <name> <lb> <ub> <obj> <C|B>
        row <name> <sense> <rhs> : <coef> <var> <coef> <var> ...

    Frequencies appear in rows in per-minute units (f/60).
    """
    out = [FORMAT_HEADER, f"name {model.name}", f"objconst {model.objective_constant!r}"]
    for j, name in enumerate(model.var_names):
        kind = "B" if model.integer[j] else "C"
        out.append(f"var {name} {model.lb[j]!r} {model.ub[j]!r} {model.obj[j]!r} {kind}")
    for r, name in enumerate(model.row_names):
        terms = " ".join(f"{v!r} {model.var_names[c]}" for c, v in sorted(model.row_coefficients(r).items()))
        out.append(f"row {name} {model.senses[r].value} {model.rhs[r]!r} : {terms}".rstrip())
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    logger.info(f"Wrote model '{model.name}' ({model.num_vars} vars, {model.num_rows} rows) to {path}.")


def read_model(path: Union[str, Path]) -> SolverModel:
    """Parse a file written by write_model."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ModelConstructionError(f"{path}: not a modnet model file")
    model = SolverModel()
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        try:
            if parts[0] == "name":
                model.name = " ".join(parts[1:])
            elif parts[0] == "objconst":
                model.objective_constant = float(parts[1])
            elif parts[0] == "var":
                _, name, lo, hi, obj, kind = parts
                model.add_var(name, float(lo), float(hi), float(obj), binary=(kind == "B"))
            elif parts[0] == "row":
                colon = parts.index(":")
                name, sense, rhs = parts[1], parts[2], float(parts[3])
                terms = parts[colon + 1:]
                coefs: Dict[int, float] = {}
                for coef, var in zip(terms[0::2], terms[1::2]):
                    coefs[model.var(var)] = coefs.get(model.var(var), 0.0) + float(coef)
                model.add_constraint(coefs, sense, rhs, name)
            else:
                raise ValueError(f"unknown record '{parts[0]}'")
        except (ValueError, KeyError) as e:
            raise ModelConstructionError(f"{path}, line {lineno}: {e}") from e
    return model
