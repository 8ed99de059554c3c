"""Episodic fly-hover-communicate environment for a single UAV base station."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .channel import ChannelParams, expected_channel_gain, horizontal_distance
from .power import (EhParams, PropulsionParams, RadioParams, data_rate, harvested_power,
                    hover_power, hover_time, propulsion_power, received_power)
from .world import World, WorldConfig, advance, generate_world, select_target, upload_size

OBS_DIM = 6
ACTION_DIM = 2
# n_f is divided by this before it enters the observation
NF_NORMALIZER = 10.0

TRACE_COLUMNS = ("step", "clock", "uav_x", "uav_y", "target", "event",
                 "r_dc", "r_eh", "r_ec", "r_aux")


@dataclass(frozen=True)
class EnvConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    propulsion: PropulsionParams = field(default_factory=PropulsionParams)
    eh: EhParams = field(default_factory=EhParams)
    radio: RadioParams = field(default_factory=RadioParams)
    mission_secs: float = 600.0
    v_max: float = 20.0
    d_dc: float = 10.0
    d_eh: float = 30.0

    def __post_init__(self):
        if self.mission_secs <= 0:
            raise ValueError(f"mission_secs must be > 0, got {self.mission_secs}")
        if self.v_max <= 0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")
        if self.d_dc <= 0:
            raise ValueError(f"d_dc must be > 0, got {self.d_dc}")
        if self.d_dc > self.d_eh:
            raise ValueError(f"d_dc ({self.d_dc}) must not exceed d_eh ({self.d_eh})")


class RewardVector(NamedTuple):
    r_dc: float    # Mbit/s collected at a hover
    r_eh: float    # uJ harvested plus number of charged devices
    r_ec: float    # minus the propulsion power, W
    r_aux: float   # distance / boundary / overflow shaping

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class HoverRecord(NamedTuple):
    target: int
    rate_bps: float
    duration_s: float
    upload_bits: float
    harvested_j: float
    charged: int


class StepOutcome(NamedTuple):
    observation: np.ndarray
    reward: RewardVector
    done: bool
    hover: Optional[HoverRecord]


@dataclass
class EnvState:
    world: World
    uav_xy: np.ndarray
    clock: float = 0.0
    target: int = 0
    n_f: int = 0
    n_d: int = 0
    hover_count: int = 0
    r_sum: float = 0.0        # bit/s, summed over hovers
    e_harvest: float = 0.0    # J
    e_consume: float = 0.0    # J
    steps: int = 0
    done: bool = False


def clip_action(action, v_max: float) -> np.ndarray:
    a = np.asarray(action, dtype=float).reshape(ACTION_DIM)
    speed = math.hypot(a[0], a[1])
    if speed > v_max:
        a = a * (v_max / speed)
    return a


class UavEnv:
    """One UAV serving a field of IoT devices.

    ``reset`` must be called before ``step``; all randomness after reset comes
    from the generator seeded there, so equal seeds give equal episodes.
    """

    def __init__(self, config: EnvConfig, record_trace: bool = False):
        self.config = config
        self.record_trace = record_trace
        self.trace: list[tuple] = []
        self.state: Optional[EnvState] = None
        self.rng: Optional[np.random.Generator] = None

    def reset(self, seed=None) -> tuple[EnvState, np.ndarray]:
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        cfg = self.config
        world = generate_world(cfg.world, self.rng)
        uav = self.rng.uniform(0.0, cfg.world.area_side, size=2)
        self.state = EnvState(world=world, uav_xy=uav, target=select_target(world))
        self.trace = []
        return self.state, self.observe()

    def target_offset(self) -> np.ndarray:
        st = self.state
        return st.world.pos[st.target] - st.uav_xy

    def observe(self) -> np.ndarray:
        st = self.state
        side = self.config.world.area_side
        dx, dy = self.target_offset()
        return np.array([dx / side, dy / side, st.uav_xy[0] / side, st.uav_xy[1] / side,
                         st.n_f / NF_NORMALIZER, st.n_d / len(st.world)])

    def _advance_world(self, substeps: int):
        st = self.state
        for _ in range(substeps):
            dropped = advance(st.world, self.rng)
            st.n_d = int(np.count_nonzero(dropped))

    def _hover(self) -> HoverRecord:
        cfg, st = self.config, self.state
        world = st.world
        j = st.target
        gain = expected_channel_gain(st.uav_xy, world.pos[j], cfg.channel)
        rate = data_rate(gain, cfg.radio)
        bits = upload_size(world.device(j), cfg.world)
        t = hover_time(bits, rate)

        near = horizontal_distance(st.uav_xy, world.pos) <= cfg.d_eh
        near[j] = False
        if near.any():
            g = expected_channel_gain(st.uav_xy, world.pos[near], cfg.channel)
            energy = float(np.sum(harvested_power(received_power(g, cfg.radio), cfg.eh)) * t)
        else:
            energy = 0.0
        charged = int(np.count_nonzero(near))

        st.r_sum += rate
        st.e_harvest += energy
        st.e_consume += hover_power(cfg.propulsion) * t
        st.hover_count += 1
        st.clock += t
        self._advance_world(math.ceil(t))
        world.buffer[j] = 0
        st.target = select_target(world)
        return HoverRecord(j, rate, t, bits, energy, charged)

    def step(self, action) -> StepOutcome:
        st = self.state
        if st is None:
            raise RuntimeError("call reset() before step()")
        if st.done:
            raise RuntimeError("episode is finished; call reset()")
        cfg = self.config
        side = cfg.world.area_side
        dt = cfg.world.dt

        vel = clip_action(action, cfg.v_max)
        speed = math.hypot(vel[0], vel[1])
        wanted = st.uav_xy + vel * dt
        st.uav_xy = np.clip(wanted, 0.0, side)
        st.n_f = st.n_f + 1 if np.any(st.uav_xy != wanted) else 0

        self._advance_world(1)
        st.clock += dt
        p_fly = propulsion_power(speed, cfg.propulsion)
        st.e_consume += p_fly * dt
        r_ec = -p_fly

        hover = None
        r_dc = r_eh = 0.0
        if horizontal_distance(st.uav_xy, st.world.pos[st.target]) <= cfg.d_dc:
            hover = self._hover()
            r_dc = hover.rate_bps / 1e6
            r_eh = hover.harvested_j * 1e6 + hover.charged
            r_ec = -hover_power(cfg.propulsion)

        dx, dy = self.target_offset()
        r_aux = -abs(dx) / side - abs(dy) / side - st.n_f - st.n_d
        reward = RewardVector(r_dc, r_eh, r_ec, r_aux)
        st.steps += 1
        st.done = st.clock >= cfg.mission_secs
        if self.record_trace:
            self.trace.append((st.steps, st.clock, st.uav_xy[0], st.uav_xy[1], st.target,
                               "hover" if hover else "fly", *reward))
        return StepOutcome(self.observe(), reward, st.done, hover)

    def episode_metrics(self) -> tuple[float, float, float, int]:
        """``(R_sum bit/s, harvested J, consumed J, hover count)`` of a finished episode."""
        st = self.state
        if st is None or not st.done:
            raise RuntimeError("episode metrics are only defined once the episode is done")
        return st.r_sum, st.e_harvest, st.e_consume, st.hover_count


def denormalize_observation(obs, config: EnvConfig, num_devices: Optional[int] = None):
    """Invert ``observe``: returns ``(dx, dy, x_u, y_u, n_f, n_d)`` in raw units."""
    side = config.world.area_side
    j = config.world.num_devices if num_devices is None else num_devices
    obs = np.asarray(obs, dtype=float)
    return np.array([obs[0] * side, obs[1] * side, obs[2] * side, obs[3] * side,
                     obs[4] * NF_NORMALIZER, obs[5] * j])
