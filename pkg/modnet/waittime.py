# modnet/waittime.py
"""
Closed-form waiting-time algebra for exponential headways.

Rates are per minute everywhere. A transit line with frequency f offers rate
f; an MoD zone with matching coefficient A and V vacant vehicles offers rate
A·V. A passenger facing several independent exponential arrivals boards the
first: the wait is exponential with the combined rate, and each option wins
with probability proportional to its rate.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

from .exceptions import WaitTimeDomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MoDZoneParams:
    matching_coefficient: float
    vehicles: float

    @property
    def rate(self) -> float:
        return self.matching_coefficient * self.vehicles


@dataclass(frozen=True)
class ModeChoice:
    p_mod: float
    p_transit: float
    expected_wait: float


def mod_wait_minutes(params: MoDZoneParams) -> float:
    """Average customer wait 1/(A·V) in the matching queue."""
    if params.matching_coefficient <= 0 or params.vehicles <= 0:
        raise WaitTimeDomainError(
            f"MoD wait undefined for A={params.matching_coefficient}, V={params.vehicles}"
        )
    return 1.0 / params.rate


def line_choice_probabilities(rates: Mapping[str, float]) -> Tuple[Dict[str, float], float]:
    """
    Boarding probabilities and expected wait for an attractive set of lines.

    Args:
        rates: Line id -> frequency (per minute).

    Returns:
        (probability per line, expected wait 1/𝔉 in minutes).
    """
    if not rates:
        raise WaitTimeDomainError("empty attractive set")
    if any(r < 0 for r in rates.values()):
        raise WaitTimeDomainError(f"negative rate in {dict(rates)}")
    total = float(sum(rates.values()))
    if total <= 0:
        raise WaitTimeDomainError("combined frequency is zero")
    return {line: r / total for line, r in rates.items()}, 1.0 / total


def mode_choice_probabilities(transit_rate: float, mod_rate: float) -> ModeChoice:
    """MoD versus transit split at a node offering both, with the combined expected wait 1/𝔽."""
    if transit_rate < 0 or mod_rate < 0:
        raise WaitTimeDomainError(f"negative rate (transit={transit_rate}, mod={mod_rate})")
    combined = transit_rate + mod_rate
    if combined <= 0:
        raise WaitTimeDomainError("both transit and MoD rates are zero")
    return ModeChoice(mod_rate / combined, transit_rate / combined, 1.0 / combined)


def conditional_waits(rates: Sequence[float]) -> List[float]:
    """Per-option contribution f_i/𝔉² to the expected wait; sums to 1/𝔉."""
    total = float(sum(rates))
    if total <= 0:
        raise WaitTimeDomainError("combined frequency is zero")
    return [r / total ** 2 for r in rates]


# --- Strategies ---

def strategy_expected_cost(options: Sequence[Tuple[float, float]]) -> float:
    """
    Expected cost of waiting at a node with the given attractive options.

    Args:
        options: (rate per minute, cost of boarding that option and continuing) pairs.

    Returns:
        (1 + Σ f·u) / Σ f.
    """
    total = float(sum(f for f, _ in options))
    if not options or total <= 0:
        raise WaitTimeDomainError("empty attractive set")
    return (1.0 + sum(f * u for f, u in options)) / total


def optimal_attractive_set(options: Sequence[Tuple[float, float]]) -> Tuple[List[int], float]:
    """
    Attractive set minimizing strategy_expected_cost.

    Options are scanned by increasing continuation cost and added while their
    cost is below the current expected cost; ties keep the lower index.

    Returns:
        (indices into `options`, expected cost).
    """
    ranked = sorted((u, i) for i, (f, u) in enumerate(options) if f > 0)
    if not ranked:
        raise WaitTimeDomainError("no option with positive rate")
    chosen: List[int] = []
    rate_sum = 0.0
    weighted = 1.0
    best = float("inf")
    for u, i in ranked:
        if u >= best:
            break
        f = options[i][0]
        chosen.append(i)
        rate_sum += f
        weighted += f * u
        best = weighted / rate_sum
    return sorted(chosen), best
