# %% [markdown]
# # Throughput and energy as disjoint paths are added
#
# The bundled `sweep` topology gives every lane a direct 100M link, a
# two-hop 100M path and two two-hop 1G paths. Each of the four pairs asks
# for 350 Mbps, more than any single path can carry.

# %%
from entre.cli import sweep_rows
from entre.scenario_io import load_bundled

base = load_bundled("sweep")
rows = sweep_rows(base, "paths", [1, 2, 3, 4])
print(" k   entre Mbps   ospf Mbps   entre W   ospf W   rounds")
for r in rows:
    print(
        f"{r['value']:2d}  {r['entre_throughput_mbps']:10.1f}  {r['ospf_throughput_mbps']:10.1f}"
        f"  {r['entre_energy_w']:8.2f}  {r['ospf_energy_w']:7.2f}  {r['entre_iterations']:6d}"
    )

# %% [markdown]
# Shortest-path routing only ever uses the direct link, so it is stuck at
# 4 x 100 Mbps. Spreading over the extra paths lets the heuristic deliver
# the full demand once the 1G paths are available.
#
# Energy is a separate story: on the redundant reference scenarios, at
# demands both strategies can carry, excluding redundant tunnels lets
# whole links sleep.

# %%
for name in ("ref_s3", "ref_s5"):
    for r in sweep_rows(load_bundled(name), "demand", [0.5, 1.0]):
        print(
            f"{name} x{r['value']}: throughput {r['entre_throughput_mbps']:.0f}/{r['ospf_throughput_mbps']:.0f} Mbps,"
            f" energy {r['entre_energy_w']:.2f}/{r['ospf_energy_w']:.2f} W (entre/ospf)"
        )
