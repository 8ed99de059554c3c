"""IoT device field: placement, Poisson data arrivals, buffers and mobility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class WorldConfig:
    num_devices: int = 100
    area_side: float = 400.0
    l_max: int = 5000
    q_bits: float = 10e6
    dt: float = 1.0
    rate_choices: tuple[float, ...] = (4.0, 8.0, 15.0, 20.0)
    num_mobile: int = 30
    mobility_step: float = 2.0
    mobility_grid: int = 21

    def __post_init__(self):
        if self.num_devices < 1:
            raise ValueError(f"num_devices must be >= 1, got {self.num_devices}")
        if self.area_side <= 0:
            raise ValueError(f"area_side must be > 0, got {self.area_side}")
        if self.l_max <= 0:
            raise ValueError(f"l_max must be > 0, got {self.l_max}")
        if self.q_bits <= 0:
            raise ValueError(f"q_bits must be > 0, got {self.q_bits}")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not 0 <= self.num_mobile <= self.num_devices:
            raise ValueError(
                f"num_mobile must lie in [0, num_devices], got {self.num_mobile}")
        if len(self.rate_choices) == 0 or min(self.rate_choices) < 0:
            raise ValueError("rate_choices must be a non-empty list of non-negative rates")
        if self.mobility_step < 0:
            raise ValueError(f"mobility_step must be >= 0, got {self.mobility_step}")
        if self.mobility_grid < 1:
            raise ValueError(f"mobility_grid must be >= 1, got {self.mobility_grid}")


@dataclass
class DeviceState:
    """Snapshot of one device. The world itself stores devices column-wise."""

    id: int
    pos: np.ndarray
    buffer: int
    rate: float
    mobile: bool
    dropped_last_step: int = 0


@dataclass
class World:
    config: WorldConfig
    pos: np.ndarray          # (J, 2) metres
    buffer: np.ndarray       # (J,) packets, int64
    rate: np.ndarray         # (J,) packets/s
    mobile: np.ndarray       # (J,) bool
    dropped: np.ndarray = field(default=None)  # (J,) packets dropped in last update

    def __post_init__(self):
        if self.dropped is None:
            self.dropped = np.zeros(len(self.buffer), dtype=np.int64)

    def __len__(self):
        return len(self.buffer)

    def device(self, j: int) -> DeviceState:
        return DeviceState(
            id=int(j), pos=self.pos[j].copy(), buffer=int(self.buffer[j]),
            rate=float(self.rate[j]), mobile=bool(self.mobile[j]),
            dropped_last_step=int(self.dropped[j]))

    @property
    def devices(self) -> list[DeviceState]:
        return [self.device(j) for j in range(len(self))]

    def priorities(self) -> np.ndarray:
        return self.rate * (self.buffer / self.config.l_max)

    def copy(self) -> "World":
        return World(self.config, self.pos.copy(), self.buffer.copy(), self.rate.copy(),
                     self.mobile.copy(), self.dropped.copy())


def generate_world(config: WorldConfig, rng: np.random.Generator) -> World:
    """Scatter devices uniformly over the square and draw their arrival rates."""
    n = config.num_devices
    pos = rng.uniform(0.0, config.area_side, size=(n, 2))
    rate = rng.choice(np.asarray(config.rate_choices, dtype=float), size=n)
    mobile = np.zeros(n, dtype=bool)
    if config.num_mobile:
        mobile[rng.choice(n, size=config.num_mobile, replace=False)] = True
    return World(config, pos, np.zeros(n, dtype=np.int64), rate, mobile)


def apply_arrivals(world: World, arrivals) -> np.ndarray:
    """Add packet arrivals to the buffers, discarding whatever exceeds ``l_max``."""
    arrivals = np.asarray(arrivals, dtype=np.int64)
    total = world.buffer + arrivals
    dropped = np.maximum(total - world.config.l_max, 0)
    world.buffer = total - dropped
    world.dropped = dropped
    return dropped


def step_data_generation(world: World, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Draw Poisson(rate * dt) arrivals for every device; return per-device drops."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return apply_arrivals(world, rng.poisson(world.rate * dt))


def mobility_offsets(config: WorldConfig) -> np.ndarray:
    return np.linspace(-config.mobility_step, config.mobility_step, config.mobility_grid)


def step_mobility(world: World, rng: np.random.Generator) -> World:
    """Random-walk every mobile device by one offset from the dense candidate grid."""
    idx = np.flatnonzero(world.mobile)
    if idx.size == 0:
        return world
    cfg = world.config
    offsets = mobility_offsets(cfg)
    pick = rng.integers(0, cfg.mobility_grid, size=(idx.size, 2))
    world.pos[idx] = np.clip(world.pos[idx] + offsets[pick], 0.0, cfg.area_side)
    return world


def advance(world: World, rng: np.random.Generator) -> np.ndarray:
    """One update interval: arrivals then mobility. Returns the drop report."""
    dropped = step_data_generation(world, world.config.dt, rng)
    step_mobility(world, rng)
    return dropped


def upload_size(device: DeviceState, config: WorldConfig) -> float:
    """Bits queued at ``device``: the buffer fill fraction times ``q_bits``."""
    return device.buffer / config.l_max * config.q_bits


def upload_priority(device: DeviceState, config: WorldConfig) -> float:
    return device.rate * (device.buffer / config.l_max)


def select_target(world: World) -> int:
    """Index of the highest-priority device; ties go to the lowest index."""
    if len(world) == 0:
        raise ValueError("world has no devices")
    return int(np.argmax(world.priorities()))
