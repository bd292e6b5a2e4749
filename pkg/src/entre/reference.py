"""Bundled 20-router reference scenarios.

Four ingress routers (0-3) each send to one egress router (16-19) through
a private "lane" of three core routers (4-15). Lanes are assembled from a
small menu of building blocks so that the amount of redundant, sleepable
capacity can be dialled up scenario by scenario:

``p2`` / ``p3`` / ``p4``
    a single 100M primary of 2, 3 or 4 hops
``p2f`` / ``p3f``
    primary plus one 2-hop 1G detour
``p2ff``
    2-hop primary plus two 1G detours
``p2cf``
    2-hop primary, a second 100M path of the same length, and a 1G detour
``bun``
    two 1G paths loaded to 1200 Mbps, so neither can be switched off

Only ingress-to-egress link directions are modelled; the reverse halves of
the cables carry nothing in these scenarios and would only add a constant.
The lane mixes were picked by searching over all four-lane combinations for
optimal savings close to 15, 26, 34, 43 and 59 percent under the default
power table; they are calibration choices, not a published topology.
"""

from __future__ import annotations

from pathlib import Path as FsPath

from entre.energy import PowerProfile
from entre.engine import EntreParams
from entre.model import IePair, Link, Path, Scenario, Topology, generate_disjoint_paths

MBPS = 1e6
N_ROUTERS = 20
CAPACITY_MBPS = {"10M": 10, "100M": 100, "1G": 1000, "10G": 10000}

# (power class, node sequence) per path; I/E are the lane's ingress/egress
LANE_TYPES: dict[str, list[tuple[str, str]]] = {
    "p2": [("100M", "IaE")],
    "p3": [("100M", "IabE")],
    "p4": [("100M", "IabcE")],
    "p2f": [("100M", "IaE"), ("1G", "IcE")],
    "p3f": [("100M", "IabE"), ("1G", "IcE")],
    "p2ff": [("100M", "IaE"), ("1G", "IbE"), ("1G", "IcE")],
    "p2cf": [("100M", "IaE"), ("100M", "IbE"), ("1G", "IcE")],
    "bun": [("1G", "IbE"), ("1G", "IcE")],
}
LANE_DEMAND_MBPS = {"bun": 1200.0}
DEFAULT_DEMAND_MBPS = 60.0

TABLE2_FAMILY: dict[str, tuple[str, str, str, str]] = {
    "ref_s1": ("p3f", "p4", "p4", "bun"),
    "ref_s2": ("p2", "p2ff", "bun", "bun"),
    "ref_s3": ("p3", "p3f", "p3f", "p4"),
    "ref_s4": ("p3f", "p3f", "p2cf", "bun"),
    "ref_s5": ("p3f", "p2cf", "p2ff", "p4"),
}


def _lane_nodes(i: int) -> dict[str, int]:
    return {"I": i, "E": 16 + i, "a": 4 + 3 * i, "b": 5 + 3 * i, "c": 6 + 3 * i}


def lane_scenario(
    lanes,
    name: str = "",
    demand_mbps: float | None = None,
    params: EntreParams | None = None,
    profile: PowerProfile | None = None,
) -> Scenario:
    """Build a four-lane scenario from lane type names (see module docstring)."""
    links: dict[tuple[int, int], Link] = {}

    def link(src, dst, power_class):
        if (src, dst) not in links:
            cap = CAPACITY_MBPS[power_class] * MBPS
            links[(src, dst)] = Link(len(links), src, dst, cap, power_class)
        return links[(src, dst)].id

    pairs = []
    for i, kind in enumerate(lanes):
        nodes = _lane_nodes(i)
        paths = []
        for power_class, seq in LANE_TYPES[kind]:
            hops = zip(seq, seq[1:])
            paths.append(Path(i, tuple(link(nodes[u], nodes[v], power_class) for u, v in hops)))
        demand = demand_mbps if demand_mbps is not None else LANE_DEMAND_MBPS.get(kind, DEFAULT_DEMAND_MBPS)
        pairs.append(IePair(i, nodes["I"], nodes["E"], demand * MBPS, tuple(paths)))
    topology = Topology.build(range(N_ROUTERS), links.values())
    return Scenario(topology, profile or PowerProfile(), pairs, params or EntreParams(), name=name)


def table2_family() -> list[Scenario]:
    """Five scenarios of increasing redundancy."""
    return [lane_scenario(lanes, name=name) for name, lanes in TABLE2_FAMILY.items()]


def sweep_topology() -> Topology:
    """Per lane: a direct 100M link, a 2-hop 100M path via ``a`` and
    2-hop 1G paths via ``b`` and ``c``. Hop-shortest disjoint path
    generation therefore adds capacity as ``k`` grows from 1 to 4."""
    links = []

    def add(src, dst, power_class):
        links.append(Link(len(links), src, dst, CAPACITY_MBPS[power_class] * MBPS, power_class))

    for i in range(4):
        n = _lane_nodes(i)
        add(n["I"], n["E"], "100M")
        add(n["I"], n["a"], "100M")
        add(n["a"], n["E"], "100M")
        add(n["I"], n["b"], "1G")
        add(n["b"], n["E"], "1G")
        add(n["I"], n["c"], "1G")
        add(n["c"], n["E"], "1G")
    return Topology.build(range(N_ROUTERS), links)


def sweep_scenario(k: int = 4, demand_mbps: float = 350.0, params: EntreParams | None = None) -> Scenario:
    """Reference topology for throughput-vs-paths sweeps.

    Demand exceeds any single path, yet stays under twice the capacity of
    any multi-hop path at the starting equal split, where the fluid model
    is close to exact. Exclusion is effectively disabled by a large energy
    threshold so that only load balancing is measured.
    """
    topo = sweep_topology()
    pairs = []
    for i in range(4):
        paths = generate_disjoint_paths(topo, i, 16 + i, k, pair_id=i)
        pairs.append(IePair(i, i, 16 + i, demand_mbps * MBPS, tuple(paths)))
    params = params or EntreParams(energy_threshold=1e3, converge_tol=1e-4, max_iters=200)
    return Scenario(topo, PowerProfile(), pairs, params, name=f"sweep_k{k}")


def with_paths(scenario: Scenario, k: int) -> Scenario:
    """Regenerate every pair's candidate set as ``k`` disjoint shortest paths."""
    pairs = []
    for pair in scenario.pairs:
        paths = generate_disjoint_paths(scenario.topology, pair.ingress, pair.egress, k, pair_id=pair.id)
        pairs.append(IePair(pair.id, pair.ingress, pair.egress, pair.demand, tuple(paths)))
    out = scenario.copy()
    out.pairs = pairs
    return out.with_all_active()


def bundled_scenarios() -> dict[str, Scenario]:
    out = {s.name: s for s in table2_family()}
    out["sweep"] = sweep_scenario()
    return out


def write_bundled(directory) -> list[FsPath]:
    from entre.scenario_io import dump_scenario

    directory = FsPath(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, scenario in bundled_scenarios().items():
        target = directory / f"{name}.json"
        dump_scenario(scenario, target)
        written.append(target)
    return written


if __name__ == "__main__":
    import sys

    for p in write_bundled(sys.argv[1] if len(sys.argv) > 1 else FsPath(__file__).parent / "scenarios"):
        print(p)
