"""Reference routings: single shortest path (OSPF-like) and static equal split.

Neither baseline sleeps anything. Links that carry no traffic stay active,
as they would in a plain IGP network.
"""

from __future__ import annotations

from dataclasses import replace

from entre.model import Scenario, SplitVector


def ospf_assign(scenario: Scenario) -> list[SplitVector]:
    """All of each pair's demand on its fewest-hop path; ties go to the lowest index."""
    out = []
    for pair in scenario.pairs:
        hops = [len(p) for p in pair.paths]
        out.append(SplitVector.single(len(hops), hops.index(min(hops))))
    return out


def equal_split_assign(scenario: Scenario) -> list[SplitVector]:
    return [SplitVector.uniform(len(pair.paths)) for pair in scenario.pairs]


def with_splits(scenario: Scenario, splits: list[SplitVector]) -> Scenario:
    pairs = [replace(pair, splits=s) for pair, s in zip(scenario.pairs, splits)]
    return replace(scenario, pairs=pairs)


def apply_baseline(scenario: Scenario, name: str) -> Scenario:
    """Scenario routed by the named baseline, with every link awake."""
    assign = {"ospf": ospf_assign, "equal": equal_split_assign}
    try:
        splits = assign[name](scenario)
    except KeyError:
        raise ValueError(f"unknown baseline {name!r}") from None
    return with_splits(scenario, splits).with_all_active()
