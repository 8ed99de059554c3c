"""UAV base station that collects data from and wirelessly charges IoT devices,
trained with multi-objective DDPG."""

from .channel import ChannelParams, expected_channel_gain, los_probability
from .config import RunConfig, desk_config, load_config, resolve
from .ddpg import PRESETS, TrainHyper, Trainer, WeightVector, evaluate, scalarize, train
from .env import EnvConfig, RewardVector, UavEnv
from .power import (EhParams, PropulsionParams, RadioParams, harvested_power, hover_power,
                    maximum_endurance_velocity, propulsion_power)
from .world import WorldConfig, generate_world

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "EhParams", "EnvConfig", "PRESETS", "PropulsionParams", "RadioParams",
    "RewardVector", "RunConfig", "TrainHyper", "Trainer", "UavEnv", "WeightVector", "WorldConfig",
    "desk_config", "evaluate", "expected_channel_gain", "generate_world", "harvested_power",
    "hover_power", "load_config", "los_probability", "maximum_endurance_velocity",
    "propulsion_power", "resolve", "scalarize", "train",
]
