# tests/conftest.py
"""Shared fixtures: synthetic networks and full-enumeration oracles for the toy instances."""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
import pytest

from modnet.assignment import estimate_wait_upper_bounds
from modnet.benders import DesignKey, Subproblem, SubproblemResult, design_key
from modnet.design_model import DesignDecision, DesignSpace, enumerate_feasible_designs
from modnet.models import DesignConfig
from modnet.network import MultimodalNetwork
from modnet.synthetic import hub_network, sample_network, sioux_falls_network, toy_instance


@dataclass
class ToyOracle:
    """Every feasible design of a toy evaluated with the Benders subproblem."""

    name: str
    network: MultimodalNetwork
    config: DesignConfig
    space: DesignSpace
    bounds: Dict
    subproblem: Subproblem
    designs: List[DesignDecision] = field(default_factory=list)
    results: Dict[DesignKey, SubproblemResult] = field(default_factory=dict)

    @property
    def optimum(self) -> float:
        return min(r.objective for r in self.results.values())

    def value(self, key: DesignKey, destination=None) -> float:
        result = self.results[key]
        if destination is None:
            return result.objective
        return result.outcomes[destination].objective


_ORACLES: Dict[str, ToyOracle] = {}


def build_oracle(name: str) -> ToyOracle:
    if name not in _ORACLES:
        network, config = toy_instance(name)
        space = DesignSpace(network, config)
        bounds = estimate_wait_upper_bounds(network, config, space)
        subproblem = Subproblem(network, space, bounds)
        oracle = ToyOracle(name, network, config, space, bounds, subproblem)
        for design in enumerate_feasible_designs(space):
            result = subproblem.solve(design)
            oracle.designs.append(design)
            oracle.results[design_key(result.bits)] = result
        _ORACLES[name] = oracle
    return _ORACLES[name]


@pytest.fixture(params=["corridor", "triangle", "square"])
def toy_oracle(request) -> ToyOracle:
    return build_oracle(request.param)


@pytest.fixture
def corridor_oracle() -> ToyOracle:
    return build_oracle("corridor")


@pytest.fixture
def triangle_oracle() -> ToyOracle:
    return build_oracle("triangle")


@pytest.fixture
def hub() -> MultimodalNetwork:
    return hub_network()


@pytest.fixture
def sample_net() -> MultimodalNetwork:
    return sample_network()


@pytest.fixture(scope="session")
def sioux_falls() -> MultimodalNetwork:
    return sioux_falls_network(DesignConfig())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
