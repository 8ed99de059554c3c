# %% [markdown]
# # How much power does hovering cost?
#
# A rotary-wing UAV burns power even when it stands still. Blade drag grows
# with speed, induced power falls as forward flight adds lift, and fuselage
# drag grows with the cube of speed. The sum dips before it climbs.

# %%
import numpy as np

from uav_moddpg.power import PropulsionParams, maximum_endurance_velocity, propulsion_power

prop = PropulsionParams()
print("hover power   P(0)  =", propulsion_power(0.0, prop), "W")
print("top speed     P(20) =", round(propulsion_power(20.0, prop), 3), "W")

# %% [markdown]
# The cheapest cruising speed per second of flight is the bottom of the dip.

# %%
v_me = maximum_endurance_velocity(prop)
print(f"max-endurance speed {v_me:.3f} m/s at {propulsion_power(v_me, prop):.2f} W")

# %%
speeds = np.arange(0, 21, 2.0)
for v, p in zip(speeds, propulsion_power(speeds, prop)):
    bar = "#" * int((p - 120) / 2)
    print(f"{v:5.1f} m/s {p:8.2f} W  {bar}")

# %% [markdown]
# Flying at V_ME saves about a quarter of the hover power, which is why a
# consumption-first policy prefers moving slowly over parking.
