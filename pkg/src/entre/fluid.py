"""Fluid delivery model and per-round metrics.

Every path offers ``x * T * t_m`` bits per window. A link whose offered
flow exceeds its capacity lets through the fraction ``c / flow`` of every
path crossing it; a path's delivery ratio is the product of those
survival ratios along its links.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from entre.energy import NetworkState, link_flows
from entre.model import Scenario

CSV_COLUMNS = (
    "round",
    "throughput_mbps",
    "total_energy_w",
    "max_link_util",
    "sleeping_frac",
    "excluded_frac",
    "max_abs_delta_x",
)


@dataclass(frozen=True)
class MetricsSnapshot:
    round: int
    throughput: float  # bits per second
    total_energy: float  # watts
    max_link_utilization: float
    sleeping_links_fraction: float
    excluded_routes_fraction: float
    max_abs_delta_x: float
    converged: bool = False

    def csv_row(self) -> dict:
        return {
            "round": self.round,
            "throughput_mbps": self.throughput / 1e6,
            "total_energy_w": self.total_energy,
            "max_link_util": self.max_link_utilization,
            "sleeping_frac": self.sleeping_links_fraction,
            "excluded_frac": self.excluded_routes_fraction,
            "max_abs_delta_x": self.max_abs_delta_x,
        }

    def as_dict(self) -> dict:
        return asdict(self)


def survival_ratios(scenario: Scenario, flow: dict[int, float]) -> dict[int, float]:
    """Fraction of each link's offered flow that gets through."""
    out = {}
    for lid, link in scenario.topology.links.items():
        f = flow[lid]
        out[lid] = link.capacity / f if f > link.capacity else 1.0
    return out


def deliver(scenario: Scenario, state: NetworkState | None, t_m: float) -> list[np.ndarray]:
    """Bits delivered on every path during one window of ``t_m`` seconds.

    Ratios are taken against offered (not upstream-thinned) flow, so a path
    crossing several overloaded links is penalized at each of them. This
    keeps delivery monotone in every capacity; it underestimates exact
    delivery once multi-hop overload gets large.
    """
    flow = state.flow if state is not None else link_flows(scenario.topology, scenario.pairs)
    survive = survival_ratios(scenario, flow)
    out = []
    for pair in scenario.pairs:
        bits = np.zeros(len(pair.paths))
        for k, (path, x) in enumerate(zip(pair.paths, pair.splits.fractions)):
            if x == 0.0:
                continue
            ratio = 1.0
            for lid in path.links:
                ratio *= survive[lid]
            bits[k] = x * pair.demand * t_m * ratio
        out.append(bits)
    return out


def delivered_link_flows(scenario: Scenario, delivered: Sequence[np.ndarray], t_m: float) -> dict[int, float]:
    """Per-link rate after overload scaling (what the links actually carry)."""
    flow = dict.fromkeys(scenario.topology.links, 0.0)
    for pair, bits in zip(scenario.pairs, delivered):
        for path, b in zip(pair.paths, bits):
            for lid in path.links:
                flow[lid] += b / t_m
    return flow


def throughput(delivered: Sequence[np.ndarray], t_m: float) -> float:
    return float(sum(b.sum() for b in delivered)) / t_m


def take_snapshot(
    scenario: Scenario,
    state: NetworkState,
    t_m: float,
    round_index: int,
    max_abs_delta_x: float = 0.0,
    converged: bool = False,
) -> MetricsSnapshot:
    links = scenario.topology.links
    n_paths = sum(len(p.paths) for p in scenario.pairs)
    n_excluded = sum(int(p.splits.excluded.sum()) for p in scenario.pairs)
    n_sleeping = sum(1 for l in links.values() if l.sleeping)
    return MetricsSnapshot(
        round=round_index,
        throughput=throughput(deliver(scenario, state, t_m), t_m),
        total_energy=state.total_energy,
        max_link_utilization=float(state.max_utilization),
        sleeping_links_fraction=n_sleeping / len(links) if links else 0.0,
        excluded_routes_fraction=n_excluded / n_paths if n_paths else 0.0,
        max_abs_delta_x=float(max_abs_delta_x),
        converged=converged,
    )
