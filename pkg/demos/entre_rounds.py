# %% [markdown]
# # One pair, two tunnels: watching the heuristic settle
#
# Two identical 100 Mbps links carry a 90 Mbps demand. We start lopsided at
# 90/10 and let the heuristic rebalance once per measurement window.

# %%
from entre.energy import PowerProfile
from entre.engine import EntreParams, entre_round
from entre.model import IePair, Link, Path, Scenario, SplitVector, Topology

MBPS = 1e6
links = [Link(0, 0, 1, 100 * MBPS, "100M"), Link(1, 0, 1, 100 * MBPS, "100M")]
pair = IePair(0, 0, 1, 90 * MBPS, (Path(0, (0,)), Path(0, (1,))), SplitVector([0.9, 0.1], [False, False]))
sc = Scenario(Topology.build([0, 1], links), PowerProfile(), [pair], EntreParams(converge_tol=5e-3))

# %%
for r in range(1, 13):
    trace = []
    sc, snap, converged = entre_round(sc, round_index=r, trace=trace)
    x = sc.pairs[0].splits.fractions
    rules = ",".join(a.rule for a in trace[0].actions)
    print(f"round {r:2d}  x=({x[0]:.4f}, {x[1]:.4f})  rules {rules:<5} max|dx|={snap.max_abs_delta_x:.4f}")
    if converged:
        break

# %% [markdown]
# The loaded tunnel has utilization above the pair average, so it loses
# share (rule 2); the idle one gains (rule 1). A tunnel with no traffic at
# all would never move, since its update is weighted by its own rate:

# %%
stuck = Scenario(sc.topology, sc.profile, [IePair(0, 0, 1, 90 * MBPS, pair.paths, SplitVector([1.0, 0.0], [False, False]))], sc.params)
print(entre_round(stuck)[0].pairs[0].splits.fractions)

# %% [markdown]
# Now give the second tunnel a pricier two-hop 1G detour. It is lightly
# used and burns more than average, so it gets excluded and its links
# go to sleep in the very first round.

# %%
links = [Link(0, 0, 1, 100 * MBPS, "100M"), Link(1, 0, 2, 1000 * MBPS, "1G"), Link(2, 2, 1, 1000 * MBPS, "1G")]
pair = IePair(0, 0, 1, 50 * MBPS, (Path(0, (0,)), Path(0, (1, 2))))
sc = Scenario(Topology.build([0, 1, 2], links), PowerProfile(), [pair], EntreParams())
sc, snap, _ = entre_round(sc)
print("excluded:", sc.pairs[0].splits.excluded, "sleeping links:", sorted(sc.topology.sleeping_ids()))
print(f"energy {snap.total_energy:.3f} W")
