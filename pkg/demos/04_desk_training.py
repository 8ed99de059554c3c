# %% [markdown]
# # Training the two preference presets at desk scale
#
# The rate-first weights {100, 1} and consumption-first weights {1, 100} are
# trained on the same seed, then evaluated without exploration noise.
# Pass --episodes 300 for the full desk run (a couple of minutes).

# %%
import argparse

import numpy as np

from uav_moddpg.config import desk_config
from uav_moddpg.ddpg import PRESETS, evaluate, train

ap = argparse.ArgumentParser()
ap.add_argument("--episodes", type=int, default=60)
ap.add_argument("--seed", type=int, default=1)
args = ap.parse_args()

cfg = desk_config()

# %%
for name in ("sodr", "soec"):
    trainer = train(cfg.env, cfg.hyper, PRESETS[name], args.seed, episodes=args.episodes)
    returns = np.array([row.ret for row in trainer.log])
    report = evaluate(trainer.agent.actor, cfg.env, episodes=5, seed=args.seed)
    print(f"{name}: return {returns[:10].mean():.0f} -> {returns[-10:].mean():.0f}, "
          f"rate {report.mean('avg_rate_mbps'):.2f} Mbit/s, "
          f"power {report.mean('avg_power_w'):.1f} W, hovers {report.mean('hovers'):.1f}")
