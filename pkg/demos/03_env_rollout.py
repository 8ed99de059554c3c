# %% [markdown]
# # One mission with a hand-written policy
#
# A greedy pilot that flies straight at the current target at full speed.
# It is a useful baseline: lots of data, lots of energy.

# %%
import numpy as np

from uav_moddpg.config import desk_config
from uav_moddpg.env import UavEnv

cfg = desk_config().env
env = UavEnv(cfg, record_trace=True)
state, obs = env.reset(seed=7)


def greedy(env):
    offset = env.target_offset()
    dist = np.hypot(*offset)
    if dist < 1e-9:
        return np.zeros(2)
    speed = min(cfg.v_max, dist)   # do not overshoot the target
    return offset / dist * speed


done = False
while not done:
    out = env.step(greedy(env))
    if out.hover:
        h = out.hover
        print(f"t={env.state.clock:6.1f}s  hover at device {h.target}: {h.rate_bps / 1e6:.2f} Mbit/s "
              f"for {h.duration_s:.2f}s, {h.charged} devices charged")
    done = out.done

# %%
r_sum, e_h, e_c, k = env.episode_metrics()
print(f"{k} hovers, mean rate {r_sum / max(k, 1) / 1e6:.2f} Mbit/s, "
      f"harvested {e_h * 1e6:.1f} uJ, average power {e_c / cfg.mission_secs:.1f} W")
