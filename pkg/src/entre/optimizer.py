"""Offline min-max optimizer for the joint utilization/energy objective.

For a pair ``i`` the cost is

    J_i(x) = sum_p  x_ip * T_i / c_p * E_p(x)

where ``c_p`` is the tunnel's bottleneck capacity and ``E_p(x)`` the summed
port energy along it, evaluated at the utilization the whole split ``x``
induces. The objective is ``max_i J_i``, subject to non-negative splits
that sum to one per pair and to no link carrying more than its capacity.

Two solvers are provided: an exhaustive grid search (the oracle) and a
projected coordinate descent for larger instances. Pairs whose tunnels
share no link are independent, so the grid search solves each connected
group of pairs separately and combines them with a max.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from entre.baselines import with_splits
from entre.energy import recompute_state
from entre.model import Scenario, SplitVector, bottleneck_capacity

CAPACITY_TOL = 1e-9
SPLIT_TOL = 1e-9
DEFAULT_BUDGET = 10**7
_CHUNK = 1 << 15


class BudgetExceeded(RuntimeError):
    pass


class NoFeasiblePoint(RuntimeError):
    pass


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    argmax_pair: int | None
    feasible: bool


def _split_list(scenario: Scenario, splits) -> list[SplitVector]:
    if splits is None:
        return [p.splits for p in scenario.pairs]
    out = []
    for pair, s in zip(scenario.pairs, splits):
        if isinstance(s, SplitVector):
            out.append(s)
        else:
            out.append(SplitVector(np.asarray(s, dtype=float), pair.splits.excluded.copy()))
    return out


def pair_costs(scenario: Scenario, splits=None) -> np.ndarray:
    """Per-pair cost ``J_i`` under ``splits`` (defaults to the scenario's own)."""
    routed = with_splits(scenario, _split_list(scenario, splits))
    state = recompute_state(routed.topology, routed.pairs, routed.profile)
    topo = routed.topology
    costs = np.zeros(len(routed.pairs))
    for i, pair in enumerate(routed.pairs):
        for k, (path, x) in enumerate(zip(pair.paths, pair.splits.fractions)):
            costs[i] += x * pair.demand / bottleneck_capacity(path, topo) * state.path_energy[i][k]
    return costs


def is_feasible(scenario: Scenario, splits=None) -> bool:
    routed = with_splits(scenario, _split_list(scenario, splits))
    for pair in routed.pairs:
        x = pair.splits.fractions
        if np.any(x < -SPLIT_TOL) or np.any(x > 1 + SPLIT_TOL):
            return False
        if abs(x[pair.splits.active].sum() - 1.0) > SPLIT_TOL:
            return False
        if np.any(x[pair.splits.excluded] != 0.0):
            return False
    state = recompute_state(routed.topology, routed.pairs, routed.profile)
    return all(
        state.flow[lid] <= link.capacity * (1 + CAPACITY_TOL) for lid, link in routed.topology.links.items()
    )


def evaluate_objective(scenario: Scenario, splits=None) -> ObjectiveValue:
    """Max per-pair cost and whether ``splits`` satisfies every constraint.

    Negative fractions have no energy to speak of; they are reported as an
    infeasible point of infinite cost instead of raising.
    """
    if any(np.any(s.fractions < 0) for s in _split_list(scenario, splits)):
        return ObjectiveValue(math.inf, None, False)
    costs = pair_costs(scenario, splits)
    feasible = is_feasible(scenario, splits)
    if len(costs) == 0:
        return ObjectiveValue(0.0, None, feasible)
    i = int(np.argmax(costs))
    return ObjectiveValue(float(costs[i]), scenario.pairs[i].id, feasible)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def simplex_grid(m: int, n: int) -> np.ndarray:
    """All points of the ``m``-simplex with coordinates in multiples of ``1/n``,
    in ascending lexicographic order."""
    if m == 1:
        return np.ones((1, 1))
    rows = []
    for bars in itertools.combinations(range(n + m - 1), m - 1):
        edges = (-1,) + bars + (n + m - 1,)
        rows.append([edges[j + 1] - edges[j] - 1 for j in range(m)])
    return np.asarray(rows, dtype=float) / n


def grid_size(m: int, n: int) -> int:
    return math.comb(n + m - 1, m - 1)


def _grid_steps(grid_step: float) -> int:
    n = round(1.0 / grid_step)
    if n < 1 or abs(n * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid_step must divide 1 evenly, got {grid_step}")
    return n


class _Batch:
    """Vectorized objective over many candidate splits for a subset of pairs.

    Columns are the non-excluded tunnels of the selected pairs; only links
    those tunnels touch are tracked.
    """

    def __init__(self, scenario: Scenario, pair_idx: Sequence[int]):
        topo = scenario.topology
        prof = scenario.profile
        self.pair_idx = list(pair_idx)
        self.cols: list[tuple[int, int]] = []
        for i in self.pair_idx:
            pair = scenario.pairs[i]
            for k in np.flatnonzero(pair.splits.active):
                self.cols.append((i, int(k)))
        link_ids = sorted({lid for i, k in self.cols for lid in scenario.pairs[i].paths[k].links})
        pos = {lid: j for j, lid in enumerate(link_ids)}
        self.link_ids = link_ids
        self.incidence = np.zeros((len(self.cols), len(link_ids)))
        self.demand = np.zeros(len(self.cols))
        self.bottleneck = np.zeros(len(self.cols))
        self.member = np.zeros((len(self.cols), len(self.pair_idx)))
        for c, (i, k) in enumerate(self.cols):
            path = scenario.pairs[i].paths[k]
            for lid in path.links:
                self.incidence[c, pos[lid]] = 1.0
            self.demand[c] = scenario.pairs[i].demand
            self.bottleneck[c] = bottleneck_capacity(path, topo)
            self.member[c, self.pair_idx.index(i)] = 1.0
        links = [topo.links[lid] for lid in link_ids]
        self.capacity = np.array([l.capacity for l in links])
        self.base = np.array([prof.base(l.power_class) for l in links])
        self.sleeping = np.array([l.sleeping for l in links], dtype=bool)
        self.idle = prof.idle_fraction
        self.sleep_power = prof.sleep_power

    def link_state(self, X: np.ndarray):
        flow = (X * self.demand) @ self.incidence
        u = flow / self.capacity
        e = self.base * (self.idle + (1.0 - self.idle) * np.minimum(u, 1.0))
        e = np.where(self.sleeping, self.sleep_power, e)
        return flow, e

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-pair costs (rows x pairs) and a feasibility flag per row."""
        X = np.atleast_2d(X)
        flow, e = self.link_state(X)
        path_e = e @ self.incidence.T
        costs = (X * self.demand / self.bottleneck * path_e) @ self.member
        feasible = np.all(flow <= self.capacity * (1 + CAPACITY_TOL), axis=1)
        return costs, feasible

    def to_splits(self, scenario: Scenario, row: np.ndarray, into: dict[int, SplitVector]):
        for i in self.pair_idx:
            pair = scenario.pairs[i]
            into[i] = SplitVector(np.zeros(len(pair.paths)), pair.splits.excluded.copy())
        for c, (i, k) in enumerate(self.cols):
            into[i].fractions[k] = row[c]

    def from_splits(self, splits: Sequence[SplitVector]) -> np.ndarray:
        return np.array([splits[i].fractions[k] for i, k in self.cols])


def pair_components(scenario: Scenario, include_idle: bool = False) -> list[list[int]]:
    """Groups of pair indices coupled through links of their non-excluded tunnels.

    Zero-demand pairs load nothing and stay singletons unless ``include_idle``.
    """
    n = len(scenario.pairs)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner: dict[int, int] = {}
    for i, pair in enumerate(scenario.pairs):
        if pair.demand == 0 and not include_idle:
            continue
        for path, excluded in zip(pair.paths, pair.splits.excluded):
            if excluded:
                continue
            for lid in path.links:
                if lid in owner:
                    ra, rb = find(owner[lid]), find(i)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
                else:
                    owner[lid] = i
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[r] for r in sorted(groups)]


def _component_grids(scenario, comp, n):
    return [simplex_grid(int(scenario.pairs[i].splits.active.sum()), n) for i in comp]


def _iterate_product(grids, chunk=_CHUNK):
    shape = tuple(len(g) for g in grids)
    total = math.prod(shape)
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        yield start, np.hstack([g[j] for g, j in zip(grids, idx)])


def grid_work(scenario: Scenario, grid_step: float) -> int:
    n = _grid_steps(grid_step)
    total = 0
    for comp in pair_components(scenario):
        total += math.prod(grid_size(int(scenario.pairs[i].splits.active.sum()), n) for i in comp)
    return total


def brute_force_solve(
    scenario: Scenario, grid_step: float = 0.05, budget: int = DEFAULT_BUDGET
) -> tuple[list[SplitVector], ObjectiveValue]:
    """Exhaustive search over the split grid; returns the feasible minimizer.

    Among equal objective values the lexicographically smallest split wins.
    ``budget`` caps the number of grid points of any independent group.
    """
    n = _grid_steps(grid_step)
    comps = pair_components(scenario)
    for comp in comps:
        size = math.prod(grid_size(int(scenario.pairs[i].splits.active.sum()), n) for i in comp)
        if size > budget:
            raise BudgetExceeded(f"{size} grid points for pairs {comp} exceed budget {budget}")

    chosen: dict[int, SplitVector] = {}
    for comp in comps:
        batch = _Batch(scenario, comp)
        best_val = math.inf
        best_row = None
        for _, X in _iterate_product(_component_grids(scenario, comp, n)):
            costs, feasible = batch.evaluate(X)
            value = np.where(feasible, costs.max(axis=1) if costs.shape[1] else 0.0, np.inf)
            j = int(np.argmin(value))
            if value[j] < best_val:
                best_val = float(value[j])
                best_row = X[j]
        if best_row is None:
            raise NoFeasiblePoint(f"no grid point satisfies capacity for pairs {comp}")
        batch.to_splits(scenario, best_row, chosen)

    splits = [chosen[i] for i in range(len(scenario.pairs))]
    return splits, evaluate_objective(scenario, splits)


def _round_to_grid(x: np.ndarray, n: int) -> np.ndarray:
    scaled = x * n
    base = np.floor(scaled + 1e-12)
    short = int(round(n - base.sum()))
    order = np.argsort(-(scaled - base), kind="stable")
    base[order[:short]] += 1
    return base / n


def feasible_start(scenario: Scenario, grid_step: float = 0.05, budget: int = DEFAULT_BUDGET) -> list[SplitVector]:
    """Equal split snapped to the grid if feasible, else the first feasible grid point."""
    n = _grid_steps(grid_step)
    splits = []
    for pair in scenario.pairs:
        x = np.zeros(len(pair.paths))
        act = pair.splits.active
        x[act] = _round_to_grid(np.full(act.sum(), 1.0 / act.sum()), n)
        splits.append(SplitVector(x, pair.splits.excluded.copy()))
    if is_feasible(scenario, splits):
        return splits
    chosen: dict[int, SplitVector] = {}
    for comp in pair_components(scenario):
        grids = _component_grids(scenario, comp, n)
        if math.prod(len(g) for g in grids) > budget:
            raise BudgetExceeded(f"feasibility scan for pairs {comp} exceeds budget")
        batch = _Batch(scenario, comp)
        for _, X in _iterate_product(grids):
            _, feasible = batch.evaluate(X)
            hits = np.flatnonzero(feasible)
            if len(hits):
                batch.to_splits(scenario, X[hits[0]], chosen)
                break
        else:
            raise NoFeasiblePoint(f"no feasible grid point for pairs {comp}")
    return [chosen[i] for i in range(len(scenario.pairs))]


def descent_solve(
    scenario: Scenario,
    start: Sequence[SplitVector] | None = None,
    step_schedule: Sequence[float] = (0.2, 0.1, 0.05),
    iters: int = 10_000,
) -> tuple[list[SplitVector], ObjectiveValue]:
    """Projected coordinate descent on the split simplices.

    Each move shifts ``step`` of split mass between two tunnels of one pair.
    A move is kept only if it stays feasible and lowers the max cost, or
    keeps the max and lowers the summed cost (which unblocks ties between
    pairs). When no move helps the next, smaller step is tried.
    """
    if start is None:
        start = feasible_start(scenario, min(step_schedule))
    start = list(start)
    if not is_feasible(scenario, start):
        raise ValueError("descent_solve needs a feasible start")
    batch = _Batch(scenario, range(len(scenario.pairs)))
    blocks: list[list[int]] = []
    for i in range(len(scenario.pairs)):
        blocks.append([c for c, (pi, _) in enumerate(batch.cols) if pi == i])

    x = batch.from_splits(start)
    costs, _ = batch.evaluate(x)
    cur = (float(costs.max(initial=0.0)), float(costs.sum()))
    done = 0
    for step in step_schedule:
        while done < iters:
            cands = []
            for cols in blocks:
                for a, b in itertools.permutations(cols, 2):
                    if x[a] <= 0.0:
                        continue
                    y = x.copy()
                    amount = min(step, x[a])
                    y[a] -= amount
                    y[b] += amount
                    y[cols] = project_simplex(y[cols])
                    cands.append(y)
            if not cands:
                break
            Y = np.array(cands)
            costs, feasible = batch.evaluate(Y)
            mx = costs.max(axis=1, initial=0.0)
            sm = costs.sum(axis=1)
            tol = 1e-12 * max(1.0, cur[0])
            better = feasible & (mx <= cur[0] + tol) & ((mx < cur[0] - tol) | (sm < cur[1] - tol))
            if not better.any():
                break
            idx = np.flatnonzero(better)
            j = idx[np.lexsort((sm[idx], mx[idx]))[0]]
            x = Y[j]
            cur = (float(mx[j]), float(sm[j]))
            done += 1

    chosen: dict[int, SplitVector] = {}
    batch.to_splits(scenario, x, chosen)
    splits = [chosen[i] for i in range(len(scenario.pairs))]
    return splits, evaluate_objective(scenario, splits)


@dataclass(frozen=True)
class EnergyPlan:
    reference_energy: float  # all links awake, no exclusion, objective-optimal splits
    optimal_energy: float
    saving: float
    sleeping: frozenset[int]
    excluded: list[np.ndarray]
    splits: list[SplitVector]
    reference_splits: list[SplitVector]


def _nonempty_masks(m: int) -> list[np.ndarray]:
    masks = []
    for bits in itertools.product((True, False), repeat=m):
        if any(bits):
            masks.append(~np.array(bits))  # True marks an excluded tunnel
    return masks


def reference_energy(scenario: Scenario, grid_step: float = 0.05, budget: int = DEFAULT_BUDGET):
    """Energy with every tunnel usable and every link awake, at the objective optimum."""
    base = _reset(scenario).with_all_active()
    splits, _ = brute_force_solve(base, grid_step, budget)
    routed = with_splits(base, splits)
    state = recompute_state(routed.topology, routed.pairs, routed.profile)
    return state.total_energy, splits


def _reset(scenario: Scenario) -> Scenario:
    pairs = [replace(p, splits=SplitVector.uniform(len(p.paths))) for p in scenario.pairs]
    return replace(scenario, pairs=pairs)


def optimal_energy_plan(
    scenario: Scenario, grid_step: float = 0.05, budget: int = DEFAULT_BUDGET
) -> EnergyPlan:
    """Best feasible energy over every choice of excluded tunnels.

    For each choice (each pair keeps at least one tunnel) the links no kept
    tunnel uses are put to sleep, the objective is minimized over the kept
    tunnels, and the resulting network energy is recorded. The lowest
    energy wins.
    """
    n = _grid_steps(grid_step)
    full = _reset(scenario)
    ref_energy, ref_splits = reference_energy(full, grid_step, budget)
    comps = pair_components(full, include_idle=True)

    work = 0
    for comp in comps:
        per_pair = [_nonempty_masks(len(full.pairs[i].paths)) for i in comp]
        for combo in itertools.product(*per_pair):
            work += math.prod(grid_size(int((~m).sum()), n) for m in combo)
    if work > budget:
        raise BudgetExceeded(f"subset enumeration needs {work} evaluations, budget {budget}")

    chosen_splits: dict[int, SplitVector] = {}
    kept_links: set[int] = set()
    total = 0.0
    for comp in comps:
        comp_links = sorted({lid for i in comp for p in full.pairs[i].paths for lid in p.links})
        best = None
        per_pair = [_nonempty_masks(len(full.pairs[i].paths)) for i in comp]
        for combo in itertools.product(*per_pair):
            pairs = []
            for i, mask in zip(comp, combo):
                pair = full.pairs[i]
                x = np.where(mask, 0.0, 1.0 / (~mask).sum())
                pairs.append(replace(pair, splits=SplitVector(x, mask.copy())))
            sub = replace(full, pairs=pairs).with_synced_links()
            try:
                splits, _ = brute_force_solve(sub, grid_step, budget)
            except NoFeasiblePoint:
                continue
            routed = with_splits(sub, splits)
            state = recompute_state(routed.topology, routed.pairs, routed.profile)
            energy = sum(state.energy[lid] for lid in comp_links)
            if best is None or energy < best[0] - 1e-12:
                best = (energy, splits, routed.used_links())
        if best is None:
            raise NoFeasiblePoint(f"no feasible tunnel subset for pairs {comp}")
        total += best[0]
        kept_links.update(best[2])
        for i, s in zip(comp, best[1]):
            chosen_splits[i] = s

    on_paths = {lid for p in full.pairs for path in p.paths for lid in path.links}
    idle_links = set(full.topology.links) - on_paths
    total += scenario.profile.sleep_power * len(idle_links)
    sleeping = frozenset(set(full.topology.links) - kept_links)
    splits = [chosen_splits[i] for i in range(len(full.pairs))]
    saving = 1.0 - total / ref_energy if ref_energy > 0 else 0.0
    return EnergyPlan(
        reference_energy=ref_energy,
        optimal_energy=total,
        saving=saving,
        sleeping=sleeping,
        excluded=[s.excluded.copy() for s in splits],
        splits=splits,
        reference_splits=ref_splits,
    )


def optimal_energy_saving(
    scenario: Scenario, grid_step: float = 0.05, budget: int = DEFAULT_BUDGET
) -> tuple[float, frozenset[int]]:
    plan = optimal_energy_plan(scenario, grid_step, budget)
    return plan.saving, plan.sleeping
