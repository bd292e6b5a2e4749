# %% [markdown]
# # How close does the heuristic get to the best achievable saving?
#
# For each bundled reference scenario we enumerate every choice of excluded
# tunnels, solve the min-max objective exactly on the remaining ones, and
# keep the lowest-energy feasible result. Savings are measured against the
# all-awake optimum.

# %%
from entre.optimizer import optimal_energy_plan
from entre.reference import TABLE2_FAMILY
from entre.scenario_io import load_bundled
from entre.simulator import run, summarize

print("scenario  entre  optimal  ratio  sleeping  excluded  rounds")
for name in TABLE2_FAMILY:
    sc = load_bundled(name)
    plan = optimal_energy_plan(sc, grid_step=0.05)
    s = summarize(run(sc).trajectory, plan.reference_energy)
    print(
        f"{name:8}  {s.energy_saving:5.3f}  {plan.saving:7.3f}  {s.energy_saving / plan.saving:5.2f}"
        f"  {s.sleeping_links_fraction:8.2f}  {s.excluded_routes_fraction:8.2f}  {s.iterations:6d}"
    )

# %% [markdown]
# Where the heuristic falls short (ref_s4, ref_s5) it is on lanes with two
# equally cheap 100M tunnels: neither looks expensive relative to the pair
# average, so both stay awake, while the optimum packs the traffic onto
# one of them.
