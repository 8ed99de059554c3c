"""Probabilistic LoS/NLoS air-to-ground channel between the UAV and ground devices.

All functions broadcast over numpy arrays, so a whole device field can be
evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    gamma0: float = 1e-3      # power gain at the 1 m reference distance (-30 dB)
    alpha: float = 2.3
    mu_nlos: float = 0.2
    a: float = 10.0
    b: float = 0.6
    altitude: float = 10.0

    def __post_init__(self):
        if self.gamma0 <= 0:
            raise ValueError(f"gamma0 must be > 0, got {self.gamma0}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not 0 < self.mu_nlos <= 1:
            raise ValueError(f"mu_nlos must lie in (0, 1], got {self.mu_nlos}")
        if self.altitude <= 0:
            raise ValueError(f"altitude must be > 0, got {self.altitude}")


def horizontal_distance(uav_xy, dev_xy):
    diff = np.asarray(dev_xy, dtype=float) - np.asarray(uav_xy, dtype=float)
    return np.hypot(diff[..., 0], diff[..., 1])


def distance_3d(uav_xy, dev_xy, altitude: float):
    if altitude <= 0:
        raise ValueError(f"altitude must be > 0, got {altitude}")
    diff = np.asarray(dev_xy, dtype=float) - np.asarray(uav_xy, dtype=float)
    return np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2 + altitude ** 2)


def elevation_angle_deg(altitude: float, dist):
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < altitude):
        raise ValueError("distance shorter than altitude is geometrically impossible")
    return np.degrees(np.arcsin(altitude / dist))


def los_probability(theta_deg, params: ChannelParams):
    """Sigmoid-in-elevation LoS probability."""
    theta = np.asarray(theta_deg, dtype=float)
    with np.errstate(over="ignore"):    # exp -> inf gives the correct limit of 0
        return 1.0 / (1.0 + params.a * np.exp(-params.b * (theta - params.a)))


def expected_channel_gain(uav_xy, dev_xy, params: ChannelParams):
    """LoS/NLoS-averaged power gain. Uplink and downlink share this value."""
    d = distance_3d(uav_xy, dev_xy, params.altitude)
    p_los = los_probability(elevation_angle_deg(params.altitude, d), params)
    return (p_los + params.mu_nlos * (1.0 - p_los)) * params.gamma0 * d ** (-params.alpha)
