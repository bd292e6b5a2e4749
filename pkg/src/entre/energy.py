"""Per-port link energy and the network state derived from a set of splits.

A port's power is its class base power scaled by a utilization factor
``idle + (1 - idle) * min(u, 1)``. ``idle_fraction = 1`` gives a purely
load-independent port, ``0`` a fully proportional one. Sleeping ports draw
``sleep_power`` regardless of class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from entre.model import IePair, LinkState, Path, Topology

DEFAULT_BASE_POWER = {"10M": 0.3, "100M": 0.6, "1G": 1.2, "10G": 5.0}
DEFAULT_IDLE_FRACTION = 0.85


class UnknownPowerClass(KeyError):
    pass


@dataclass(frozen=True)
class PowerProfile:
    base_power: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BASE_POWER))
    idle_fraction: float = DEFAULT_IDLE_FRACTION
    sleep_power: float = 0.0

    def __post_init__(self):
        if not self.base_power:
            raise ValueError("power profile needs at least one power class")
        if any(not w > 0 for w in self.base_power.values()):
            raise ValueError("base powers must be positive")
        if not 0.0 <= self.idle_fraction <= 1.0:
            raise ValueError("idle_fraction must lie in [0, 1]")
        if not 0.0 <= self.sleep_power <= min(self.base_power.values()):
            raise ValueError("sleep_power must lie in [0, min base power]")

    def base(self, power_class: str) -> float:
        try:
            return self.base_power[power_class]
        except KeyError:
            raise UnknownPowerClass(power_class) from None


def utilization_factor(u, idle_fraction: float):
    return idle_fraction + (1.0 - idle_fraction) * np.minimum(u, 1.0)


def link_energy(u: float, power_class: str, state: LinkState, profile: PowerProfile) -> float:
    """Watts drawn by one port at utilization ``u``."""
    if u < 0:
        raise ValueError(f"utilization must be non-negative, got {u}")
    base = profile.base(power_class)
    if state is LinkState.SLEEPING:
        return profile.sleep_power
    return float(base * utilization_factor(u, profile.idle_fraction))


@dataclass(frozen=True)
class NetworkState:
    """Flows, utilizations and energies for one assignment of splits.

    Per-link quantities are keyed by link id; per-path quantities are one
    array per pair, aligned with ``pair.paths``.
    """

    flow: dict[int, float]
    utilization: dict[int, float]
    energy: dict[int, float]
    path_utilization: list[np.ndarray]
    path_energy: list[np.ndarray]

    @property
    def total_energy(self) -> float:
        return float(sum(self.energy.values()))

    @property
    def max_utilization(self) -> float:
        return max(self.utilization.values(), default=0.0)


def path_energy(path: Path, state: NetworkState) -> float:
    return float(sum(state.energy[lid] for lid in path.links))


def path_utilization(path: Path, state: NetworkState) -> float:
    return max(state.utilization[lid] for lid in path.links)


def link_flows(topology: Topology, pairs: Sequence[IePair]) -> dict[int, float]:
    flow = dict.fromkeys(topology.links, 0.0)
    # fixed summation order, so the result does not depend on how pairs are listed
    for pair in sorted(pairs, key=lambda p: p.id):
        for path, x in zip(pair.paths, pair.splits.fractions):
            if x == 0.0:
                continue
            rate = x * pair.demand
            for lid in path.links:
                flow[lid] += rate
    return flow


def recompute_state(topology: Topology, pairs: Sequence[IePair], profile: PowerProfile) -> NetworkState:
    """Derive the full network state from the pairs' current splits.

    Overload is kept in the state (``u > 1``); the simulator clamps delivery.
    """
    flow = link_flows(topology, pairs)
    util = {}
    energy = {}
    for lid, link in topology.links.items():
        u = flow[lid] / link.capacity
        util[lid] = u
        energy[lid] = link_energy(u, link.power_class, link.state, profile)
    state = NetworkState(flow, util, energy, [], [])
    for pair in pairs:
        state.path_utilization.append(np.array([path_utilization(p, state) for p in pair.paths]))
        state.path_energy.append(np.array([path_energy(p, state) for p in pair.paths]))
    return state
