# modnet/cuts.py
"""
Cuts for the Benders master problem and the pool that manages them.

Optimality cuts bound η (or η_k) from below by an affine function of the
design bits. Clique and cover cuts are static valid inequalities on the
design bits alone and are loaded before the first master solve.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .design_model import DesignSpace, is_sentinel, token

logger = logging.getLogger(__name__)

ZERO_DUAL = 1e-9
_KEY_DIGITS = 9


@dataclass
class OptimalityCut:
    """η_scope >= constant + Σ coefs[j]·bit_j; scope None means the single aggregated η."""

    scope: Optional[str]
    constant: float
    coefs: Dict[int, float]
    iteration: int = 0
    design_key: Optional[Tuple[int, ...]] = None

    def rhs(self, bits: Sequence[float]) -> float:
        return self.constant + sum(c * bits[j] for j, c in self.coefs.items())

    def key(self) -> Tuple:
        terms = tuple(sorted((j, round(c, _KEY_DIGITS)) for j, c in self.coefs.items() if c != 0.0))
        return ("opt", self.scope, round(self.constant, _KEY_DIGITS), terms)

    def name(self, index: int) -> str:
        scope = token(self.scope) if self.scope is not None else "all"
        return f"opt[{scope},{index}]"


@dataclass(frozen=True)
class StaticCut:
    """Σ bits over `members` <= rhs."""

    kind: str
    members: Tuple[int, ...]
    rhs: float
    label: str

    def holds(self, bits: Sequence[float], tol: float = 1e-9) -> bool:
        return sum(bits[j] for j in self.members) <= self.rhs + tol


def sum_cuts(cuts: Iterable[OptimalityCut]) -> OptimalityCut:
    """Coefficient-wise sum of cuts into one aggregated cut."""
    constant = 0.0
    coefs: Dict[int, float] = {}
    for cut in cuts:
        constant += cut.constant
        for j, c in cut.coefs.items():
            coefs[j] = coefs.get(j, 0.0) + c
    return OptimalityCut(None, constant, coefs)


# --- Clique and cover cuts ---

def make_clique_cuts(space: DesignSpace) -> List[StaticCut]:
    """
    At most ⌊F̄/n⌋ zones can take fleet level n; the inequality is emitted
    only where it is not redundant (⌊F̄/n⌋ < |Z|). The sentinel level costs
    no vehicles and never gets a cut.
    """
    cuts: List[StaticCut] = []
    zones = space.zones
    for n in space.omegas:
        if is_sentinel(n):
            continue
        cap = math.floor(space.config.fleet_budget / n + 1e-9)
        if cap >= len(zones):
            continue
        members = tuple(space.n_index[(z, n)] for z in zones)
        cuts.append(StaticCut("clique", members, float(cap), f"clique[{n:g}]"))
    logger.info(f"Generated {len(cuts)} clique cut(s).")
    return cuts


def make_cover_cuts(space: DesignSpace) -> List[StaticCut]:
    """
    Cover cuts on the bus budget, one frequency at a time.

    Lines are taken in ascending bus requirement (line id breaks ties) and
    added to G while the running total fits B̄; every line left out then
    forms the cover G ∪ {l} and the cut Σ_C y <= |C| - 1.
    """
    budget = space.config.bus_budget
    cuts: List[StaticCut] = []
    for f in space.thetas:
        ordered = sorted(space.lines, key=lambda l: (space.bus_cost[(l, f)], l))
        group: List[str] = []
        total = 0
        for line in ordered:
            total += space.bus_cost[(line, f)]
            if total <= budget:
                group.append(line)
            else:
                break
        for line in ordered:
            if line in group:
                continue
            cover = group + [line]
            members = tuple(space.y_index[(l, f)] for l in cover)
            cuts.append(StaticCut("cover", members, float(len(cover) - 1), f"cover[{f:g},{token(line)}]"))
    logger.info(f"Generated {len(cuts)} cover cut(s) for bus budget {budget:g}.")
    return cuts


def is_minimal_cover(space: DesignSpace, cut: StaticCut) -> bool:
    """True if the members exceed B̄ and removing any one of them fits it."""
    lookup = {j: key for key, j in space.y_index.items()}
    costs = [space.bus_cost[lookup[j]] for j in cut.members]
    total = sum(costs)
    budget = space.config.bus_budget
    return total > budget and all(total - c <= budget for c in costs)


# --- Pool ---

@dataclass
class CutStats:
    generated: int = 0
    duplicates: int = 0
    removed: int = 0
    restored: int = 0


@dataclass
class CutPool:
    """
    Active optimality cuts plus an archive of removed ones.

    Each active cut carries a counter of consecutive master solves at which
    its dual was zero; cleanup moves cuts whose counter reached the limit to
    the archive unless they are protected. A cut restored from the archive
    becomes permanent and is never archived again.
    """

    static: List[StaticCut] = field(default_factory=list)
    active: Dict[Tuple, OptimalityCut] = field(default_factory=dict)
    archive: Dict[Tuple, OptimalityCut] = field(default_factory=dict)
    permanent: Set[Tuple] = field(default_factory=set)
    zero_streak: Dict[Tuple, int] = field(default_factory=dict)
    stats: CutStats = field(default_factory=CutStats)
    history: List[OptimalityCut] = field(default_factory=list)

    def add(self, cut: OptimalityCut) -> bool:
        """Add a cut; returns False for a duplicate of an active cut."""
        key = cut.key()
        if key in self.active:
            self.stats.duplicates += 1
            return False
        if key in self.archive:
            self.active[key] = self.archive.pop(key)
            self.permanent.add(key)
            self.stats.restored += 1
        else:
            self.active[key] = cut
            self.stats.generated += 1
            self.history.append(cut)
        self.zero_streak[key] = 0
        return True

    def cuts(self) -> List[OptimalityCut]:
        return list(self.active.values())

    def record_duals(self, duals: Dict[Tuple, float]) -> None:
        for key in self.active:
            if abs(duals.get(key, 0.0)) <= ZERO_DUAL:
                self.zero_streak[key] = self.zero_streak.get(key, 0) + 1
            else:
                self.zero_streak[key] = 0

    def cleanup(self, after: int, protected: Set[Tuple]) -> List[OptimalityCut]:
        """Archive cuts with `after` consecutive zero duals; protected and permanent keys stay."""
        removed: List[OptimalityCut] = []
        for key in list(self.active):
            if key in protected or key in self.permanent or self.zero_streak.get(key, 0) < after:
                continue
            cut = self.active.pop(key)
            self.archive[key] = cut
            self.zero_streak.pop(key, None)
            removed.append(cut)
        if removed:
            self.stats.removed += len(removed)
            logger.info(f"Cut cleanup archived {len(removed)} non-active cut(s); {len(self.active)} remain.")
        return removed

    def __len__(self) -> int:
        return len(self.active)
