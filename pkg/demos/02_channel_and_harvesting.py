# %% [markdown]
# # Link quality and harvested power under the UAV
#
# The UAV flies at 10 m. Devices right below it see line of sight almost
# surely; devices far off mostly do not.

# %%
import numpy as np

from uav_moddpg.channel import ChannelParams, elevation_angle_deg, expected_channel_gain, los_probability
from uav_moddpg.power import EhParams, RadioParams, data_rate, harvested_power, received_power

ch, radio, eh = ChannelParams(), RadioParams(), EhParams()

# %%
for r in (0, 5, 10, 20, 30, 60):
    d = np.hypot(r, ch.altitude)
    theta = elevation_angle_deg(ch.altitude, d)
    g = expected_channel_gain([0, 0], [r, 0], ch)
    print(f"offset {r:3d} m  elev {theta:5.1f} deg  P_LoS {los_probability(theta, ch):.3f}"
          f"  gain {g:.3e}  rate {data_rate(g, radio) / 1e6:5.2f} Mbit/s"
          f"  harvest {harvested_power(received_power(g, radio), eh) * 1e6:5.3f} uW")

# %% [markdown]
# The rectifier saturates: past a few tens of microwatts of input, extra RF
# power buys almost nothing.

# %%
for p_uw in (0, 1, 2.9, 5, 10, 20, 50, 100):
    print(f"in {p_uw:6.1f} uW -> out {harvested_power(p_uw * 1e-6, eh) * 1e6:6.3f} uW")
