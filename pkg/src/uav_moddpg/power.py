"""Rotary-wing propulsion power, RF energy harvesting and uplink rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _check_positive(obj):
    for name, value in vars(obj).items():
        if not value > 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be > 0, got {value}")


@dataclass(frozen=True)
class PropulsionParams:
    p0: float = 79.86         # blade profile power, W
    pi: float = 88.63         # induced power, W
    u_tip: float = 120.0
    v0: float = 4.03
    d0_drag: float = 0.6
    rho: float = 1.225
    s: float = 0.05           # rotor solidity
    area: float = 0.503

    def __post_init__(self):
        _check_positive(self)


@dataclass(frozen=True)
class EhParams:
    p_limit: float = 9.079e-6
    c: float = 47083.0
    d: float = 2.9e-6

    def __post_init__(self):
        _check_positive(self)


@dataclass(frozen=True)
class RadioParams:
    p_downlink: float = 10.0      # 40 dBm
    p_uplink: float = 1e-5        # -20 dBm
    noise: float = 1e-12          # -90 dBm
    bandwidth: float = 1e6

    def __post_init__(self):
        _check_positive(self)


def propulsion_power(v, params: PropulsionParams):
    """Blade profile + induced + parasite power at horizontal speed ``v`` (m/s)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("speed must be non-negative")
    v2 = v * v
    blade = params.p0 * (1.0 + 3.0 * v2 / params.u_tip ** 2)
    root = np.sqrt(1.0 + v2 * v2 / (4.0 * params.v0 ** 4)) - v2 / (2.0 * params.v0 ** 2)
    # cancellation can push ``root`` a hair below zero at high speed
    induced = params.pi * np.sqrt(np.maximum(root, 0.0))
    parasite = 0.5 * params.d0_drag * params.rho * params.s * params.area * v2 * v
    out = blade + induced + parasite
    return float(out) if out.ndim == 0 else out


def hover_power(params: PropulsionParams) -> float:
    return params.p0 + params.pi


def maximum_endurance_velocity(params: PropulsionParams, v_search_max: float = 20.0) -> float:
    """Speed in [0, v_search_max] with the lowest propulsion power."""
    res = minimize_scalar(lambda v: propulsion_power(v, params), bounds=(0.0, v_search_max),
                          method="bounded", options={"xatol": 1e-5})
    v = float(res.x)
    # the bounded solver never returns the endpoints themselves
    for edge in (0.0, v_search_max):
        if propulsion_power(edge, params) < propulsion_power(v, params):
            v = edge
    return v


def received_power(gain, radio: RadioParams):
    gain = np.asarray(gain, dtype=float)
    if np.any(gain < 0):
        raise ValueError("channel gain must be non-negative")
    return gain * radio.p_downlink


def harvested_power(p_r, eh: EhParams):
    """Non-linear (logistic) rectifier output; zero at zero input, saturating at ``p_limit``.

    Written as ``p_limit * (1 - e^{-c p_r}) / (1 + x)`` with ``x = e^{-c(p_r - d)}``,
    which avoids overflowing ``e^{cd}`` for steep circuits. ``x = inf`` gives 0.
    """
    p_r = np.asarray(p_r, dtype=float)
    if np.any(p_r < 0):
        raise ValueError("received power must be non-negative")
    with np.errstate(over="ignore"):
        x = np.exp(-eh.c * (p_r - eh.d))
    out = eh.p_limit * -np.expm1(-eh.c * p_r) / (1.0 + x)
    return float(out) if out.ndim == 0 else out


def data_rate(gain, radio: RadioParams):
    """Shannon uplink rate in bit/s for a device transmitting at ``p_uplink``."""
    gain = np.asarray(gain, dtype=float)
    if np.any(gain < 0):
        raise ValueError("channel gain must be non-negative")
    out = radio.bandwidth * np.log2(1.0 + radio.p_uplink * gain / radio.noise)
    return float(out) if out.ndim == 0 else out


def hover_time(upload_bits: float, rate: float) -> float:
    if not rate > 0:
        raise ValueError(f"data rate must be > 0 to upload, got {rate}")
    return upload_bits / rate
