"""Flat ``key = value`` run configuration.

Every key is optional; missing keys take the full-scale simulation defaults
(100 devices on a 400 m square, 600 s missions, 1600 episodes). Powers given in
dBm/dB and EH constants given in uW are converted to SI units on load. Lines
starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .channel import ChannelParams
from .ddpg import TrainHyper, WeightVector
from .env import EnvConfig
from .power import EhParams, PropulsionParams, RadioParams, db_to_linear, dbm_to_watts
from .world import WorldConfig


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


# key -> (default, type, constraint)
SCHEMA: dict[str, tuple] = {
    # devices
    "num_devices": (100, int, "pos"),
    "area_side": (400.0, float, "pos"),
    "l_max": (5000, int, "pos"),
    "q_bits": (10e6, float, "pos"),
    "dt": (1.0, float, "pos"),
    "rate_choices": ((4.0, 8.0, 15.0, 20.0), "floats", "nonneg"),
    "num_mobile": (30, int, "nonneg"),
    "mobility_step": (2.0, float, "nonneg"),
    "mobility_grid": (21, int, "pos"),
    # channel
    "gamma0_db": (-30.0, float, "any"),
    "alpha": (2.3, float, "pos"),
    "mu_nlos": (0.2, float, "unit"),
    "los_a": (10.0, float, "pos"),
    "los_b": (0.6, float, "pos"),
    "altitude": (10.0, float, "pos"),
    # propulsion
    "p0": (79.86, float, "pos"),
    "p_induced": (88.63, float, "pos"),
    "u_tip": (120.0, float, "pos"),
    "v0": (4.03, float, "pos"),
    "d0_drag": (0.6, float, "pos"),
    "rho": (1.225, float, "pos"),
    "solidity": (0.05, float, "pos"),
    "rotor_area": (0.503, float, "pos"),
    # energy harvesting
    "eh_p_limit_uw": (9.079, float, "pos"),
    "eh_c": (47083.0, float, "pos"),
    "eh_d_uw": (2.9, float, "pos"),
    # radio
    "bandwidth_hz": (1e6, float, "pos"),
    "noise_dbm": (-90.0, float, "any"),
    "p_downlink_dbm": (40.0, float, "any"),
    "p_uplink_dbm": (-20.0, float, "any"),
    # mission
    "mission_secs": (600.0, float, "pos"),
    "v_max": (20.0, float, "pos"),
    "d_dc": (10.0, float, "pos"),
    "d_eh": (30.0, float, "pos"),
    # learning
    "actor_hidden": ((400, 300, 300, 300), "ints", "pos"),
    "critic_hidden": ((400, 300), "ints", "pos"),
    "lr_actor": (1e-3, float, "pos"),
    "lr_critic": (1e-3, float, "pos"),
    "gamma": (0.99, float, "prob"),
    "tau": (0.005, float, "prob"),
    "replay_capacity": (10_000, int, "pos"),
    "batch_size": (64, int, "pos"),
    "noise_sigma2": (2.0, float, "pos"),
    "noise_decay": (0.9999, float, "unit"),
    "noise_floor": (0.01, float, "unit"),
    "reward_scale": (1e-3, float, "pos"),
    "episodes": (1600, int, "nonneg"),
    "checkpoint_every": (100, int, "pos"),
    "terminal_at_timeout": (False, bool, "any"),
    # preferences (w_aux is pinned to 1)
    "w_dc": (100.0, float, "nonneg"),
    "w_eh": (1.0, float, "nonneg"),
    "w_ec": (1.0, float, "nonneg"),
    "seed": (0, int, "nonneg"),
}

_CONSTRAINTS = {
    "pos": (lambda v: v > 0, "> 0"),
    "nonneg": (lambda v: v >= 0, ">= 0"),
    "unit": (lambda v: 0 < v <= 1, "in (0, 1]"),
    "prob": (lambda v: 0 <= v <= 1, "in [0, 1]"),
    "any": (lambda v: True, ""),
}

# desk-scale overrides: small field, short missions, small networks
DESK = {
    "num_devices": 10,
    "area_side": 100.0,
    "num_mobile": 3,
    "mission_secs": 120.0,
    "episodes": 300,
    "actor_hidden": (64, 64),
    "critic_hidden": (64, 64),
}


@dataclass(frozen=True)
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    hyper: TrainHyper = field(default_factory=TrainHyper)
    weights: WeightVector = field(default_factory=lambda: WeightVector(w_dc=100.0))
    seed: int = 0
    values: tuple = ()      # the resolved flat key/value pairs, for manifests

    @property
    def episodes(self) -> int:
        return self.hyper.episodes

    def flat(self) -> dict:
        return dict(self.values)


_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_value(key: str, raw: str):
    kind = SCHEMA[key][1]
    text = raw.strip()
    try:
        if kind is bool:
            return _BOOLS[text.lower()]
        if kind == "floats":
            return tuple(float(x) for x in text.replace(",", " ").split())
        if kind == "ints":
            return tuple(int(x) for x in text.replace(",", " ").split())
        if kind is int:
            f = float(text)
            if not f.is_integer():
                raise ValueError
            return int(f)
        return float(text)
    except (KeyError, ValueError):
        raise ConfigError(f"cannot parse value for {key!r}: {raw!r}", key) from None


def _coerce(key: str, value):
    kind = SCHEMA[key][1]
    try:
        if kind is bool:
            if isinstance(value, str):
                return _BOOLS[value.strip().lower()]
            if value not in (0, 1):
                raise ValueError
            return bool(value)
        if kind == "floats":
            return tuple(float(x) for x in value)
        if kind == "ints":
            return tuple(int(x) for x in value)
        if kind is int and float(value) != int(value):
            raise ValueError
        return kind(value)
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"cannot parse value for {key!r}: {value!r}", key) from None


def _check(key: str, value) -> None:
    ok, desc = _CONSTRAINTS[SCHEMA[key][2]]
    items = value if isinstance(value, tuple) else (value,)
    if isinstance(value, tuple) and not value:
        raise ConfigError(f"{key!r} out of range: needs at least one value", key)
    for v in items:
        if not ok(v):
            raise ConfigError(f"{key!r} out of range: must be {desc}, got {value!r}", key)


def resolve(overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from defaults plus ``overrides`` (already-typed values)."""
    values = {k: spec[0] for k, spec in SCHEMA.items()}
    for key, value in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key)
        value = _coerce(key, value)
        _check(key, value)
        values[key] = value
    v = values
    try:
        world = WorldConfig(v["num_devices"], v["area_side"], v["l_max"], v["q_bits"], v["dt"],
                            tuple(v["rate_choices"]), v["num_mobile"], v["mobility_step"],
                            v["mobility_grid"])
        channel = ChannelParams(db_to_linear(v["gamma0_db"]), v["alpha"], v["mu_nlos"],
                                v["los_a"], v["los_b"], v["altitude"])
        prop = PropulsionParams(v["p0"], v["p_induced"], v["u_tip"], v["v0"], v["d0_drag"],
                                v["rho"], v["solidity"], v["rotor_area"])
        eh = EhParams(v["eh_p_limit_uw"] * 1e-6, v["eh_c"], v["eh_d_uw"] * 1e-6)
        radio = RadioParams(dbm_to_watts(v["p_downlink_dbm"]), dbm_to_watts(v["p_uplink_dbm"]),
                            dbm_to_watts(v["noise_dbm"]), v["bandwidth_hz"])
        env = EnvConfig(world, channel, prop, eh, radio, v["mission_secs"], v["v_max"],
                        v["d_dc"], v["d_eh"])
        hyper = TrainHyper(tuple(v["actor_hidden"]), tuple(v["critic_hidden"]), v["lr_actor"],
                           v["lr_critic"], v["gamma"], v["tau"], v["replay_capacity"],
                           v["batch_size"], v["noise_sigma2"], v["noise_decay"],
                           v["noise_floor"], v["reward_scale"], v["episodes"],
                           v["checkpoint_every"], v["terminal_at_timeout"])
        weights = WeightVector(v["w_dc"], v["w_eh"], v["w_ec"], 1.0)
    except ValueError as exc:
        raise ConfigError(f"inconsistent configuration: {exc}") from exc
    return RunConfig(env, hyper, weights, v["seed"], tuple(sorted(values.items())))


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"unparsable config file {source}: {exc}") from None
    overrides = {}
    for key, raw in parser["run"].items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key)
        overrides[key] = _parse_value(key, raw)
    return resolve(overrides)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def _format(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return repr(value)


def dump_config(cfg: RunConfig) -> str:
    """Every key, resolved; ``parse_config(dump_config(c)) == c``."""
    return "".join(f"{k} = {_format(v)}\n" for k, v in cfg.values)


def desk_config(**overrides) -> RunConfig:
    return resolve({**DESK, **overrides})
