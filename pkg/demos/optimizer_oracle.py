# %% [markdown]
# # Descent against the exhaustive grid
#
# The grid search is exact on its lattice and serves as the oracle. The
# descent solver only looks at local mass shifts, so it is worth seeing
# how often it lands on the same value.

# %%
import time

import numpy as np

from entre.energy import PowerProfile
from entre.engine import EntreParams
from entre.model import IePair, Link, Path, Scenario, Topology
from entre.optimizer import NoFeasiblePoint, brute_force_solve, descent_solve

MBPS = 1e6
rng = np.random.default_rng(0)


def random_instance():
    links, pairs, node = [], [], 2
    for pid in range(int(rng.integers(1, 3))):
        ing, eg = node, node + 1
        node += 2
        paths = []
        for _ in range(int(rng.integers(2, 4))):
            cls = str(rng.choice(["100M", "1G"]))
            cap = {"100M": 100, "1G": 1000}[cls] * rng.uniform(0.3, 1.5) * MBPS
            links.append(Link(len(links), ing, eg, cap, cls))
            paths.append(Path(pid, (links[-1].id,)))
        pairs.append(IePair(pid, ing, eg, rng.uniform(10, 150) * MBPS, tuple(paths)))
    topo = Topology.build(range(node), links)
    return Scenario(topo, PowerProfile(idle_fraction=rng.uniform(0, 1)), pairs, EntreParams())


# %%
gaps, t0 = [], time.perf_counter()
while len(gaps) < 50:
    sc = random_instance()
    try:
        _, oracle = brute_force_solve(sc, 0.05)
    except NoFeasiblePoint:
        continue
    _, found = descent_solve(sc)
    gaps.append((found.value - oracle.value) / oracle.value)
print(f"{len(gaps)} instances in {time.perf_counter() - t0:.1f}s, worst gap {max(gaps):.2%}, mean {np.mean(gaps):.2%}")
