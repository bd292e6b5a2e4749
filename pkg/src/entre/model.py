"""Topology, path and demand representation.

Links are directed. A physical cable between two routers is two ``Link``
objects, one per direction, each with its own port energy. All ids are
non-negative integers and every tie is broken by the lowest id so that
path generation and everything downstream of it is reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from entre.energy import PowerProfile
    from entre.engine import EntreParams

SPLIT_TOL = 1e-9


class NoPathError(ValueError):
    """Raised when the egress cannot be reached from the ingress at all."""


class LinkState(str, Enum):
    ACTIVE = "active"
    SLEEPING = "sleeping"


@dataclass(frozen=True)
class Link:
    id: int
    src: int
    dst: int
    capacity: float  # bits per second
    power_class: str
    state: LinkState = LinkState.ACTIVE

    @property
    def sleeping(self) -> bool:
        return self.state is LinkState.SLEEPING


@dataclass(frozen=True)
class Path:
    """An explicit tunnel: ordered link ids from ingress to egress."""

    pair: int
    links: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.links)

    def nodes(self, topology: Topology) -> list[int]:
        first = topology.links[self.links[0]]
        return [first.src] + [topology.links[lid].dst for lid in self.links]


@dataclass
class SplitVector:
    """Per-path traffic fractions plus the exclusion flags of a pair.

    ``fractions`` sums to one over non-excluded paths and is exactly zero on
    excluded ones.
    """

    fractions: np.ndarray
    excluded: np.ndarray

    def __post_init__(self):
        self.fractions = np.asarray(self.fractions, dtype=float)
        self.excluded = np.asarray(self.excluded, dtype=bool)
        if self.fractions.shape != self.excluded.shape:
            raise ValueError("fractions and excluded must have the same length")

    @classmethod
    def uniform(cls, n: int) -> SplitVector:
        return cls(np.full(n, 1.0 / n if n else 0.0), np.zeros(n, dtype=bool))

    @classmethod
    def single(cls, n: int, index: int) -> SplitVector:
        x = np.zeros(n)
        x[index] = 1.0
        return cls(x, np.zeros(n, dtype=bool))

    @property
    def active(self) -> np.ndarray:
        return ~self.excluded

    def __len__(self) -> int:
        return len(self.fractions)

    def copy(self) -> SplitVector:
        return SplitVector(self.fractions.copy(), self.excluded.copy())

    def violations(self, tol: float = SPLIT_TOL) -> list[str]:
        out = []
        x = self.fractions
        if not np.all(np.isfinite(x)):
            out.append("non-finite split fraction")
            return out
        if np.any(x < -tol) or np.any(x > 1 + tol):
            out.append("split fraction outside [0, 1]")
        if np.any(self.excluded & (x != 0.0)):
            out.append("excluded path carries a non-zero fraction")
        if not self.active.any():
            out.append("every path is excluded")
        elif abs(x[self.active].sum() - 1.0) > tol:
            out.append(f"fractions sum to {x[self.active].sum():.12g}, not 1")
        return out


@dataclass
class IePair:
    id: int
    ingress: int
    egress: int
    demand: float  # bits per second
    paths: tuple[Path, ...]
    splits: SplitVector = None  # type: ignore[assignment]

    def __post_init__(self):
        self.paths = tuple(self.paths)
        if self.splits is None:
            self.splits = SplitVector.uniform(len(self.paths))

    def copy(self) -> IePair:
        return replace(self, splits=self.splits.copy())


@dataclass(frozen=True)
class Topology:
    nodes: tuple[int, ...]
    links: Mapping[int, Link]

    @classmethod
    def build(cls, nodes: Iterable[int], links: Iterable[Link]) -> Topology:
        return cls(tuple(sorted(nodes)), {l.id: l for l in sorted(links, key=lambda l: l.id)})

    @property
    def link_ids(self) -> tuple[int, ...]:
        return tuple(self.links)

    def with_sleeping(self, sleeping: Iterable[int]) -> Topology:
        """Copy of the topology where exactly ``sleeping`` links are asleep."""
        sleeping = set(sleeping)
        links = {}
        for lid, link in self.links.items():
            state = LinkState.SLEEPING if lid in sleeping else LinkState.ACTIVE
            links[lid] = link if link.state is state else replace(link, state=state)
        return Topology(self.nodes, links)

    def sleeping_ids(self) -> frozenset[int]:
        return frozenset(lid for lid, l in self.links.items() if l.sleeping)


@dataclass
class Scenario:
    topology: Topology
    profile: PowerProfile
    pairs: list[IePair]
    params: EntreParams
    name: str = ""
    meta: dict = field(default_factory=dict)

    def copy(self) -> Scenario:
        return replace(self, pairs=[p.copy() for p in self.pairs], meta=dict(self.meta))

    @property
    def total_demand(self) -> float:
        return float(sum(p.demand for p in self.pairs))

    def used_links(self) -> frozenset[int]:
        """Links traversed by at least one non-excluded path of any pair."""
        used = set()
        for pair in self.pairs:
            for path, excluded in zip(pair.paths, pair.splits.excluded):
                if not excluded:
                    used.update(path.links)
        return frozenset(used)

    def with_synced_links(self) -> Scenario:
        """Sleep exactly the links that no non-excluded path traverses."""
        unused = set(self.topology.links) - self.used_links()
        return replace(self, topology=self.topology.with_sleeping(unused))

    def with_all_active(self) -> Scenario:
        return replace(self, topology=self.topology.with_sleeping(()))


def validate_topology(scenario: Scenario) -> list[str]:
    """Return a list of human-readable violations; empty means valid."""
    topo = scenario.topology
    out: list[str] = []
    nodes = set(topo.nodes)
    if len(nodes) != len(topo.nodes):
        out.append("duplicate node id")
    for nid in topo.nodes:
        if nid < 0:
            out.append(f"node {nid}: negative id")
    for lid, link in topo.links.items():
        if lid != link.id:
            out.append(f"link {link.id}: registered under id {lid}")
        if lid < 0:
            out.append(f"link {lid}: negative id")
        if link.src not in nodes:
            out.append(f"link {lid}: unknown src node {link.src}")
        if link.dst not in nodes:
            out.append(f"link {lid}: unknown dst node {link.dst}")
        if link.src == link.dst:
            out.append(f"link {lid}: src equals dst ({link.src})")
        if not link.capacity > 0:
            out.append(f"link {lid}: capacity must be positive, got {link.capacity}")
        if link.power_class not in scenario.profile.base_power:
            out.append(f"link {lid}: unknown power class {link.power_class!r}")

    seen_pairs = set()
    for pair in scenario.pairs:
        tag = f"pair {pair.id}"
        if pair.id in seen_pairs:
            out.append(f"{tag}: duplicate pair id")
        seen_pairs.add(pair.id)
        if pair.ingress not in nodes:
            out.append(f"{tag}: unknown ingress node {pair.ingress}")
        if pair.egress not in nodes:
            out.append(f"{tag}: unknown egress node {pair.egress}")
        if pair.ingress == pair.egress:
            out.append(f"{tag}: ingress equals egress")
        if not pair.demand >= 0:
            out.append(f"{tag}: demand must be non-negative, got {pair.demand}")
        if not pair.paths:
            out.append(f"{tag}: no paths")
            continue
        if len(pair.splits) != len(pair.paths):
            out.append(f"{tag}: {len(pair.splits)} split entries for {len(pair.paths)} paths")
        else:
            out.extend(f"{tag}: {v}" for v in pair.splits.violations())
        for k, path in enumerate(pair.paths):
            out.extend(_path_violations(path, f"{tag} path {k}", pair, topo))
    return out


def _path_violations(path: Path, tag: str, pair: IePair, topo: Topology) -> list[str]:
    if path.pair != pair.id:
        return [f"{tag}: belongs to pair {path.pair}"]
    if not path.links:
        return [f"{tag}: empty path"]
    missing = [lid for lid in path.links if lid not in topo.links]
    if missing:
        return [f"{tag}: unknown link id {lid}" for lid in missing]
    out = []
    links = [topo.links[lid] for lid in path.links]
    for a, b in zip(links, links[1:]):
        if a.dst != b.src:
            out.append(f"{tag}: discontinuous path between links {a.id} and {b.id}")
            return out
    visited = [links[0].src] + [l.dst for l in links]
    if len(set(visited)) != len(visited):
        out.append(f"{tag}: path revisits a node")
    if links[0].src != pair.ingress:
        out.append(f"{tag}: starts at node {links[0].src}, not ingress {pair.ingress}")
    if links[-1].dst != pair.egress:
        out.append(f"{tag}: ends at node {links[-1].dst}, not egress {pair.egress}")
    return out


def _bfs_path(adjacency, ingress, egress, banned):
    # neighbours are visited in ascending node id, parallel links by ascending link id
    parent: dict[int, tuple[int, int]] = {}
    seen = {ingress}
    queue = deque([ingress])
    while queue:
        node = queue.popleft()
        if node == egress:
            break
        for nxt, lid in adjacency.get(node, ()):
            if lid in banned or nxt in seen:
                continue
            seen.add(nxt)
            parent[nxt] = (node, lid)
            queue.append(nxt)
    if egress not in parent:
        return None
    links = []
    node = egress
    while node != ingress:
        node, lid = parent[node]
        links.append(lid)
    return tuple(reversed(links))


def generate_disjoint_paths(
    topology: Topology, ingress: int, egress: int, k: int, pair_id: int = 0
) -> list[Path]:
    """Up to ``k`` pairwise edge-disjoint paths, each hop-shortest among the
    links not yet used. Fewer are returned when the graph runs out."""
    if ingress == egress:
        raise ValueError("ingress and egress must differ")
    if k < 1:
        raise ValueError("k must be at least 1")
    adjacency: dict[int, list[tuple[int, int]]] = {}
    for link in topology.links.values():
        adjacency.setdefault(link.src, []).append((link.dst, link.id))
    for succ in adjacency.values():
        succ.sort()

    banned: set[int] = set()
    paths = []
    while len(paths) < k:
        links = _bfs_path(adjacency, ingress, egress, banned)
        if links is None:
            break
        paths.append(Path(pair_id, links))
        banned.update(links)
    if not paths:
        raise NoPathError(f"node {egress} is unreachable from node {ingress}")
    return paths


def bottleneck_capacity(path: Path, topology: Topology) -> float:
    return min(topology.links[lid].capacity for lid in path.links)


def hop_count(path: Path) -> int:
    return len(path.links)


def link_index(topology: Topology) -> dict[int, int]:
    return {lid: i for i, lid in enumerate(topology.links)}


def paths_share_links(paths: Sequence[Path]) -> bool:
    seen: set[int] = set()
    for path in paths:
        if seen.intersection(path.links):
            return True
        seen.update(path.links)
    return False
