# modnet/models.py
"""
Pydantic models for configuration, run manifests and report payloads.

These are the validated contracts at the edges of the toolkit: what a config
file may contain, what is written next to every output directory, and the
schemas of comparison.json / grid.csv rows. Internal numeric structures
(networks, solver models, cuts) are plain dataclasses in their own modules.
"""

import logging
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

SENTINEL_FLEET = 0.01


# --- Design configuration ---

class DesignConfig(BaseModel):
    """Design-side data: frequency and fleet menus, budgets, fares and walking parameters."""

    theta_per_hour: List[float] = Field(
        default_factory=lambda: [2.0, 3.0, 4.0, 6.0, 12.0],
        description="Frequency menu Θ in buses/hr.",
    )
    omega: List[float] = Field(
        default_factory=lambda: [SENTINEL_FLEET, 50.0, 100.0, 200.0, 500.0],
        description="Fleet menu Ω in vehicles per zone; must contain the 0.01 sentinel.",
    )
    bus_budget: float = Field(70.0, ge=0.0, description="B̄, buses available.")
    fleet_budget: float = Field(3000.0, ge=0.0, description="F̄, MoD vehicles available.")
    value_of_time: float = Field(23.0, gt=0.0, description="Value of time in $/hr.")
    mod_fare_per_minute: float = Field(0.21, ge=0.0)
    mod_base_fare: float = Field(0.8, ge=0.0)
    transit_fare: float = Field(2.0, ge=0.0)
    matching_coefficient: float = Field(0.0017, gt=0.0, description="Default 𝒜 for every zone.")
    zone_matching: Dict[str, float] = Field(default_factory=dict, description="Per-zone 𝒜 overrides.")
    walk_radius: float = Field(0.5, gt=0.0, description="ζ, acceptable walking distance (mi).")
    walk_speed_mph: float = Field(3.0, gt=0.0)
    force_all_lines_open: bool = False
    wait_bound_method: Literal["analytic", "assignment"] = "analytic"
    wait_bound_safety: float = Field(1.1, ge=1.0)

    @field_validator("theta_per_hour", "omega")
    @classmethod
    def _menu_positive(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("menu must not be empty")
        if any(v <= 0 for v in value):
            raise ValueError(f"menu entries must be positive, got {value}")
        return sorted(set(float(v) for v in value))

    @field_validator("omega")
    @classmethod
    def _omega_has_sentinel(cls, value: List[float]) -> List[float]:
        if not any(abs(v - SENTINEL_FLEET) < 1e-12 for v in value):
            raise ValueError(f"fleet menu must contain the {SENTINEL_FLEET} sentinel, got {value}")
        return value

    @field_validator("zone_matching")
    @classmethod
    def _matching_positive(cls, value: Dict[str, float]) -> Dict[str, float]:
        bad = {z: a for z, a in value.items() if a <= 0}
        if bad:
            raise ValueError(f"matching coefficients must be positive: {bad}")
        return value

    @property
    def theta_per_minute(self) -> List[float]:
        return [f / 60.0 for f in self.theta_per_hour]

    def matching_for(self, zone: str) -> float:
        return self.zone_matching.get(zone, self.matching_coefficient)


# --- Benders configuration ---

class BendersConfig(BaseModel):
    """Driver settings shared by the classic, enhanced and monolith methods."""

    method: Literal["monolith", "classic", "enhanced"] = "enhanced"
    epsilon: float = Field(1e-4, gt=0.0, description="Absolute UB-LB tolerance (passenger-minutes).")
    relative_gap: float = Field(1e-7, ge=0.0, description="Relative (UB-LB)/UB tolerance.")
    max_iterations: int = Field(500, ge=1)
    time_limit: Optional[float] = Field(None, gt=0.0, description="Wall-clock limit in seconds.")
    disaggregated: bool = True
    multiple_solutions: int = Field(0, ge=0, description="Extra pool solutions l per master solve.")
    pool_gap: float = Field(0.01, ge=0.0)
    clique_cover: bool = True
    cut_cleanup: bool = False
    cleanup_after: int = Field(5, ge=1, description="K consecutive zero-dual master solves.")
    jobs: int = Field(1, ge=1)
    seed: int = 0

    @property
    def pool_size(self) -> int:
        return 1 + self.multiple_solutions


# --- Design files ---

class DesignFile(BaseModel):
    """design.json: open lines with their frequency (buses/hr) and the fleet per zone."""

    frequencies: Dict[str, float] = Field(default_factory=dict)
    fleets: Dict[str, float] = Field(default_factory=dict)
    objective: Optional[float] = None
    status: Optional[str] = None

    @field_validator("frequencies", "fleets")
    @classmethod
    def _positive(cls, value: Dict[str, float]) -> Dict[str, float]:
        bad = {k: v for k, v in value.items() if v <= 0}
        if bad:
            raise ValueError(f"values must be positive: {bad}")
        return value


# --- Run manifest ---

class RunManifest(BaseModel):
    """Snapshot written as manifest.json next to every output directory."""

    command: str
    argv: List[str] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)
    input_hashes: Dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    version: str
    started_at: str
    finished_at: Optional[str] = None


# --- Report payloads ---

class RouteRow(BaseModel):
    route: str
    located: bool
    frequency_per_hour: Optional[float] = None
    buses: int = 0
    mean_headway_wait_min: Optional[float] = Field(
        None, description="Mean headway-equivalent wait, 60/f minutes."
    )


class ScenarioSummary(BaseModel):
    """One column of the integrated-vs-baseline comparison table."""

    name: str
    status: str = "optimal"
    explanation: Optional[str] = None
    active_routes: int = 0
    buses_used: int = 0
    vehicles_used: float = 0.0
    total_trips: float = 0.0
    served_trips: float = 0.0
    satisfied_demand_pct: float = 0.0
    avg_in_vehicle_min: float = 0.0
    avg_wait_min: float = 0.0
    total_cost_min: float = 0.0
    in_vehicle_cost_min: float = 0.0
    road_wait_min: float = 0.0
    transit_wait_min: float = 0.0
    routes: List[RouteRow] = Field(default_factory=list)
    fleet_by_zone: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _satisfied_at_most_total(self) -> "ScenarioSummary":
        if self.satisfied_demand_pct > 100.0 + 1e-9:
            raise ValueError(f"satisfied demand above 100%: {self.satisfied_demand_pct}")
        return self


class ComparisonReport(BaseModel):
    scenarios: Dict[str, ScenarioSummary] = Field(default_factory=dict)


class GridCell(BaseModel):
    """One row of grid.csv."""

    buses: float
    vehicles: float
    ivt_hr: Optional[float] = None
    road_wait_hr: Optional[float] = None
    transit_wait_hr: Optional[float] = None
    total_hr: Optional[float] = None
    share_mod: Optional[float] = None
    share_transit: Optional[float] = None
    share_multi: Optional[float] = None
    routes_located: Optional[int] = None
    status: str = "optimal"
    error: Optional[str] = None


GRID_COLUMNS = [
    "buses", "vehicles", "ivt_hr", "road_wait_hr", "transit_wait_hr", "total_hr",
    "share_mod", "share_transit", "share_multi", "routes_located",
]
