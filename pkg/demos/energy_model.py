# %% [markdown]
# # Port energy as a function of load
#
# Every link draws its class base power scaled by an affine utilization
# factor. The `idle_fraction` knob says how much of that power is paid no
# matter what; a sleeping port draws `sleep_power` instead.

# %%
import numpy as np

from entre.energy import PowerProfile, link_energy
from entre.model import LinkState

profile = PowerProfile()  # 10M 0.3 W, 100M 0.6 W, 1G 1.2 W, 10G 5.0 W, idle 0.85
for cls, watts in profile.base_power.items():
    print(f"{cls:>4}: {watts:.1f} W at full load")

# %% [markdown]
# Sweep utilization from idle to 150%. Power saturates at full load.

# %%
u = np.linspace(0, 1.5, 7)
for idle in (0.0, 0.5, 0.85, 1.0):
    prof = PowerProfile(idle_fraction=idle)
    row = [link_energy(v, "1G", LinkState.ACTIVE, prof) for v in u]
    print(f"idle={idle:<4}", " ".join(f"{w:5.2f}" for w in row))

# %% [markdown]
# With realistic idle shares (0.85) load balancing saves little; almost
# all of the saving has to come from putting ports to sleep.

# %%
awake = link_energy(0.0, "1G", LinkState.ACTIVE, profile)
asleep = link_energy(0.0, "1G", LinkState.SLEEPING, profile)
print(f"idle 1G port awake: {awake:.2f} W, asleep: {asleep:.2f} W")
