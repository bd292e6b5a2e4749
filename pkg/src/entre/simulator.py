"""Discrete-round fluid simulation driving ENTRE or a baseline."""

from __future__ import annotations

from dataclasses import dataclass

from entre.baselines import apply_baseline
from entre.energy import recompute_state
from entre.engine import EntreParams, run_until_convergence
from entre.fluid import (  # noqa: F401  re-exported
    CSV_COLUMNS,
    MetricsSnapshot,
    deliver,
    delivered_link_flows,
    take_snapshot,
    throughput,
)
from entre.model import Scenario

STRATEGIES = ("entre", "ospf", "equal")


@dataclass(frozen=True)
class RunResult:
    strategy: str
    scenario: Scenario  # final routing state
    trajectory: list[MetricsSnapshot]
    iterations: int

    @property
    def final(self) -> MetricsSnapshot:
        return self.trajectory[-1]

    @property
    def converged(self) -> bool:
        return self.trajectory[-1].converged


def run(scenario: Scenario, strategy: str = "entre", params: EntreParams | None = None) -> RunResult:
    """Simulate one strategy to steady state.

    ENTRE runs round by round until it converges. Baselines are static, so
    they produce a single steady-state round.
    """
    params = params or scenario.params
    if strategy == "entre":
        final, trajectory, iterations = run_until_convergence(scenario, params)
        return RunResult(strategy, final, trajectory, iterations)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; pick one of {STRATEGIES}")
    routed = apply_baseline(scenario, strategy)
    state = recompute_state(routed.topology, routed.pairs, routed.profile)
    snap = take_snapshot(routed, state, params.measure_period, 1, 0.0, converged=True)
    return RunResult(strategy, routed, [snap], 1)


@dataclass(frozen=True)
class Summary:
    throughput: float  # bits per second
    total_energy: float
    energy_saving: float
    sleeping_links_fraction: float
    excluded_routes_fraction: float
    iterations: int
    converged: bool

    def as_row(self) -> dict:
        return {
            "throughput_mbps": self.throughput / 1e6,
            "total_energy_w": self.total_energy,
            "energy_saving": self.energy_saving,
            "sleeping_frac": self.sleeping_links_fraction,
            "excluded_frac": self.excluded_routes_fraction,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def summarize(trajectory: list[MetricsSnapshot], reference_energy: float) -> Summary:
    """Final-round figures; saving is relative to ``reference_energy``."""
    if not trajectory:
        raise ValueError("empty trajectory")
    last = trajectory[-1]
    first_converged = next((s.round for s in trajectory if s.converged), None)
    saving = 1.0 - last.total_energy / reference_energy if reference_energy > 0 else 0.0
    return Summary(
        throughput=last.throughput,
        total_energy=last.total_energy,
        energy_saving=saving,
        sleeping_links_fraction=last.sleeping_links_fraction,
        excluded_routes_fraction=last.excluded_routes_fraction,
        iterations=first_converged if first_converged is not None else len(trajectory),
        converged=first_converged is not None,
    )
