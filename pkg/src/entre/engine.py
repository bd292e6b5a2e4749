"""The ENTRE heuristic: one synchronized rebalancing round per measurement window.

Every round each ingress-egress pair measures the rate delivered on each of
its tunnels, compares each tunnel's utilization and energy with the
rate-weighted pair averages, and picks one action per tunnel:

=====  =====  ==========================================================
 dx     dE    action
=====  =====  ==========================================================
 > 0    > 0   apply dx                                         (rule 1)
 < 0    < 0   apply dx                                         (rule 2)
 > 0    < 0   exclude the tunnel if ``E_p - E_avg > energy_threshold``
              and sleep its now-unused links, else nothing     (rule 3)
 < 0    > 0   apply dx if ``U_p - U_avg > util_threshold``,
              else nothing                                     (rule 4)
 != 0   = 0   apply dx (energy-neutral move)
=====  =====  ==========================================================

All deltas of a round are computed from one immutable state before any of
them is applied, so the result does not depend on the order pairs are
visited in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from entre.energy import NetworkState, recompute_state
from entre.fluid import MetricsSnapshot, deliver, take_snapshot
from entre.model import IePair, Scenario, SplitVector

log = logging.getLogger(__name__)

# deltas this small are float noise around a balanced point
DELTA_TOL = 1e-12


@dataclass(frozen=True)
class EntreParams:
    measure_period: float = 1.0  # seconds per round
    util_threshold: float = 0.0
    energy_threshold: float = 0.0  # watts
    min_util: float = 0.0  # tunnels at or below this utilization get no dx
    min_energy: float = 0.0  # watts; tunnels at or below get no dE
    converge_tol: float = 1e-3
    max_iters: int = 50

    def __post_init__(self):
        if not self.measure_period > 0:
            raise ValueError("measure_period must be positive")
        for name in ("util_threshold", "energy_threshold", "min_util", "min_energy"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.converge_tol > 0:
            raise ValueError("converge_tol must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be an integer >= 1")


class ActionKind(str, Enum):
    APPLY = "apply"
    EXCLUDE = "exclude"
    NOOP = "noop"


@dataclass(frozen=True)
class RoundAction:
    kind: ActionKind
    delta: float = 0.0
    rule: str = ""


@dataclass(frozen=True)
class PairRoundView:
    rates: np.ndarray  # bits per second
    utilization: np.ndarray
    energy: np.ndarray  # watts
    active: np.ndarray
    avg_utilization: float
    avg_energy: float
    delta_x: np.ndarray
    delta_e: np.ndarray


def measure_rates(pair: IePair, delivered_bits: Sequence[float], t_m: float) -> np.ndarray:
    if not t_m > 0:
        raise ValueError("t_m must be positive")
    bits = np.asarray(delivered_bits, dtype=float)
    if np.any(bits < 0):
        raise ValueError("delivered bits must be non-negative")
    rates = bits / t_m
    rates[pair.splits.excluded] = 0.0
    return rates


def _weighted_mean(rates, values, active) -> float:
    rates = np.asarray(rates, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = np.ones(len(values), dtype=bool) if active is None else np.asarray(active, dtype=bool)
    w = rates[mask]
    v = values[mask]
    total = w.sum()
    if total > 0:
        return float(w @ v / total)
    # nothing measured yet: plain mean over the usable tunnels
    return float(v.mean())


def pair_average_utilization(rates, utils, active=None) -> float:
    """Rate-weighted mean tunnel utilization of one pair."""
    return _weighted_mean(rates, utils, active)


def pair_average_energy(rates, energies, active=None) -> float:
    """Rate-weighted mean tunnel energy of one pair."""
    return _weighted_mean(rates, energies, active)


def compute_delta_x(view: PairRoundView, min_util: float) -> np.ndarray:
    """Fraction change per tunnel, weighted by the tunnel's share of the pair's rate."""
    dx = np.zeros(len(view.utilization))
    total = view.rates[view.active].sum()
    if total <= 0:
        return dx
    mask = view.active & (view.utilization > min_util)
    dx[mask] = (view.avg_utilization - view.utilization[mask]) * view.rates[mask] / total
    return dx


def compute_delta_E(view: PairRoundView, min_energy: float) -> np.ndarray:
    de = np.zeros(len(view.energy))
    mask = view.active & (view.energy > min_energy)
    de[mask] = view.avg_energy - view.energy[mask]
    return de


def build_pair_view(pair: IePair, rates, utils, energies, params: EntreParams) -> PairRoundView:
    rates = np.asarray(rates, dtype=float)
    utils = np.asarray(utils, dtype=float)
    energies = np.asarray(energies, dtype=float)
    active = pair.splits.active.copy()
    empty = np.zeros(len(rates))
    view = PairRoundView(
        rates=rates,
        utilization=utils,
        energy=energies,
        active=active,
        avg_utilization=pair_average_utilization(rates, utils, active),
        avg_energy=pair_average_energy(rates, energies, active),
        delta_x=empty,
        delta_e=empty,
    )
    return replace(
        view,
        delta_x=compute_delta_x(view, params.min_util),
        delta_e=compute_delta_E(view, params.min_energy),
    )


def _sign(value: float, scale: float = 1.0) -> int:
    if abs(value) <= DELTA_TOL * max(1.0, scale):
        return 0
    return 1 if value > 0 else -1


def apply_rules(pair: IePair, view: PairRoundView, params: EntreParams) -> list[RoundAction]:
    actions = []
    for k in range(len(view.delta_x)):
        if not view.active[k]:
            actions.append(RoundAction(ActionKind.NOOP, rule="excluded"))
            continue
        dx = float(view.delta_x[k])
        sx = _sign(dx)
        se = _sign(float(view.delta_e[k]), abs(view.avg_energy))
        if sx == 0:
            actions.append(RoundAction(ActionKind.NOOP, rule="idle"))
        elif se == 0:
            actions.append(RoundAction(ActionKind.APPLY, dx, rule="energy-neutral"))
        elif sx > 0 and se > 0:
            actions.append(RoundAction(ActionKind.APPLY, dx, rule="1"))
        elif sx < 0 and se < 0:
            actions.append(RoundAction(ActionKind.APPLY, dx, rule="2"))
        elif sx > 0:
            if view.energy[k] - view.avg_energy > params.energy_threshold:
                actions.append(RoundAction(ActionKind.EXCLUDE, rule="3a"))
            else:
                actions.append(RoundAction(ActionKind.NOOP, rule="3b"))
        else:
            if view.utilization[k] - view.avg_utilization > params.util_threshold:
                actions.append(RoundAction(ActionKind.APPLY, dx, rule="4a"))
            else:
                actions.append(RoundAction(ActionKind.NOOP, rule="4b"))
    return actions


def _exclude(splits: SplitVector, k: int) -> tuple[SplitVector, bool]:
    if splits.excluded[k] or splits.active.sum() <= 1:
        return splits, False
    x = splits.fractions.copy()
    excluded = splits.excluded.copy()
    x[k] = 0.0
    excluded[k] = True
    remaining = ~excluded
    total = x[remaining].sum()
    if total > 0:
        x[remaining] /= total
    else:
        x[remaining] = 1.0 / remaining.sum()
    return SplitVector(x, excluded), True


def exclude_path(scenario: Scenario, pair_index: int, path_index: int) -> tuple[Scenario, bool]:
    """Drop one tunnel from a pair's routing table and sleep links nobody uses.

    The pair's last remaining tunnel is never dropped; the second return
    value reports whether the exclusion happened.
    """
    pair = scenario.pairs[pair_index]
    splits, done = _exclude(pair.splits, path_index)
    if not done:
        return scenario, False
    out = scenario.copy()
    out.pairs[pair_index] = replace(pair, splits=splits)
    return out.with_synced_links(), True


def apply_and_renormalize(splits: SplitVector, actions: Sequence[RoundAction]) -> SplitVector:
    x = splits.fractions.copy()
    applied = False
    for k, action in enumerate(actions):
        if action.kind is ActionKind.APPLY and action.delta != 0.0 and not splits.excluded[k]:
            x[k] += action.delta
            applied = True
    if not applied:
        return splits.copy()
    x = np.clip(x, 0.0, 1.0)
    x[splits.excluded] = 0.0
    active = splits.active
    total = x[active].sum()
    if total > 0:
        x[active] /= total
    else:
        x[active] = 1.0 / active.sum()
    return SplitVector(x, splits.excluded.copy())


@dataclass(frozen=True)
class PairTrace:
    pair_id: int
    view: PairRoundView
    actions: tuple[RoundAction, ...]


def entre_round(
    scenario: Scenario,
    state: NetworkState | None = None,
    params: EntreParams | None = None,
    round_index: int = 1,
    trace: list | None = None,
) -> tuple[Scenario, MetricsSnapshot, bool]:
    """Run one measurement window and rebalance every pair once."""
    params = params or scenario.params
    t_m = params.measure_period
    if state is None:
        state = recompute_state(scenario.topology, scenario.pairs, scenario.profile)
    delivered = deliver(scenario, state, t_m)

    plans = []
    for i, pair in enumerate(scenario.pairs):
        rates = measure_rates(pair, delivered[i], t_m)
        view = build_pair_view(pair, rates, state.path_utilization[i], state.path_energy[i], params)
        actions = apply_rules(pair, view, params)
        plans.append(actions)
        if trace is not None:
            trace.append(PairTrace(pair.id, view, tuple(actions)))

    new_pairs = []
    any_excluded = False
    max_applied = 0.0
    for pair, actions in zip(scenario.pairs, plans):
        splits = pair.splits
        for k, action in enumerate(actions):
            if action.kind is ActionKind.EXCLUDE:
                splits, done = _exclude(splits, k)
                if done:
                    any_excluded = True
                    log.debug("pair %d: excluded path %d", pair.id, k)
        for action in actions:
            if action.kind is ActionKind.APPLY:
                max_applied = max(max_applied, abs(action.delta))
        splits = apply_and_renormalize(splits, actions)
        new_pairs.append(replace(pair, splits=splits))

    out = replace(scenario, pairs=new_pairs).with_synced_links()
    new_state = recompute_state(out.topology, out.pairs, out.profile)
    converged = max_applied < params.converge_tol and not any_excluded
    snap = take_snapshot(out, new_state, t_m, round_index, max_applied, converged)
    return out, snap, converged


def run_until_convergence(
    scenario: Scenario, params: EntreParams | None = None
) -> tuple[Scenario, list[MetricsSnapshot], int]:
    """Repeat rounds until one converges or ``max_iters`` is reached.

    Running out of rounds is not an error: the last snapshot then carries
    ``converged=False`` and the iteration count equals ``max_iters``.
    """
    params = params or scenario.params
    current = scenario.with_synced_links()
    trajectory = []
    for it in range(1, int(params.max_iters) + 1):
        current, snap, converged = entre_round(current, None, params, round_index=it)
        trajectory.append(snap)
        if converged:
            return current, trajectory, it
    log.info("no convergence after %d rounds", params.max_iters)
    return current, trajectory, int(params.max_iters)


def link_sleep_consistent(scenario: Scenario) -> bool:
    """A link sleeps exactly when no non-excluded tunnel of any pair uses it."""
    used = scenario.used_links()
    return all(link.sleeping == (lid not in used) for lid, link in scenario.topology.links.items())
