from __future__ import annotations

import numpy as np
import pytest

from entre.energy import PowerProfile
from entre.engine import EntreParams
from entre.model import IePair, Link, Path, Scenario, SplitVector, Topology

MBPS = 1e6


def make_links(specs):
    """``specs``: iterable of (src, dst, capacity_mbps[, power_class])."""
    out = []
    for lid, spec in enumerate(specs):
        src, dst, cap = spec[:3]
        cls = spec[3] if len(spec) > 3 else "100M"
        out.append(Link(lid, src, dst, cap * MBPS, cls))
    return out


def make_scenario(nodes, link_specs, pairs, profile=None, params=None, name="t"):
    """``pairs``: iterable of (ingress, egress, demand_mbps, [[link ids], ...][, splits])."""
    topo = Topology.build(nodes, make_links(link_specs))
    built = []
    for pid, spec in enumerate(pairs):
        ingress, egress, demand, paths = spec[:4]
        splits = None
        if len(spec) > 4 and spec[4] is not None:
            splits = SplitVector(np.array(spec[4], float), np.zeros(len(paths), bool))
        built.append(IePair(pid, ingress, egress, demand * MBPS, tuple(Path(pid, tuple(p)) for p in paths), splits))
    return Scenario(topo, profile or PowerProfile(), built, params or EntreParams(), name=name)


def parallel_scenario(caps, demand, splits=None, classes=None, profile=None, params=None):
    """One pair over len(caps) parallel single-link paths 0 -> 1."""
    classes = classes or ["100M"] * len(caps)
    specs = [(0, 1, c, k) for c, k in zip(caps, classes)]
    paths = [[i] for i in range(len(caps))]
    return make_scenario([0, 1], specs, [(0, 1, demand, paths, splits)], profile, params)


def random_scenario(rng: np.random.Generator, n_pairs=None, max_paths=4, overload=False, shared=True):
    """Small random scenario: every pair owns 2..max_paths two-hop paths via
    private middle nodes; with ``shared`` some pairs also route through a
    common core link so that pairs interact."""
    n_pairs = n_pairs or int(rng.integers(2, 7))
    classes = ["10M", "100M", "1G"]
    caps = {"10M": 10, "100M": 100, "1G": 1000}
    nodes = [0, 1]  # shared core link 0 -> 1
    specs = [(0, 1, caps["100M"] * float(rng.uniform(0.5, 2.0)), "100M")]
    pairs = []
    nxt = 2
    for _ in range(n_pairs):
        ing, eg = nxt, nxt + 1
        nxt += 2
        nodes += [ing, eg]
        m = int(rng.integers(2, max_paths + 1))
        paths = []
        for k in range(m):
            if shared and k == 0 and rng.random() < 0.5:
                a = len(specs)
                specs.append((ing, 0, 1000.0, "1G"))
                specs.append((1, eg, 1000.0, "1G"))
                paths.append([a, 0, a + 1])
                continue
            mid = nxt
            nxt += 1
            nodes.append(mid)
            cls = classes[int(rng.integers(0, 3))]
            cap = caps[cls] * float(rng.uniform(0.3, 1.5))
            a = len(specs)
            specs.append((ing, mid, cap, cls))
            specs.append((mid, eg, cap * float(rng.uniform(0.8, 1.5)), cls))
            paths.append([a, a + 1])
        demand = float(rng.uniform(1, 300 if overload else 80))
        raw = rng.random(m) + 0.05
        pairs.append((ing, eg, demand, paths, list(raw / raw.sum())))
    profile = PowerProfile(idle_fraction=float(rng.uniform(0, 1)))
    params = EntreParams(
        energy_threshold=float(rng.choice([0.0, 0.5, 1e3])),
        util_threshold=float(rng.choice([0.0, 0.05])),
        max_iters=20,
    )
    return make_scenario(nodes, specs, pairs, profile, params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def _report(label: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        print(ACCEPTANCE_LINES[-1])
        assert ok, f"{label}: {detail}"

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
