"""Operational motion controllers: observation vectors in, setpoints out.

Camera tracking rotates the drone until the target's box center sits inside
a deadband around image center and holds a standoff distance D0; radar
following commands the displacement -(R - R0) along the forward axis,
rate-limited per control tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .geometry import Pose, clamp, wrap_angle

if TYPE_CHECKING:
    from .perception import TargetObservation


@dataclass(frozen=True)
class LocalVelocity:
    """Body-frame velocity command: x forward, y left, z up.

    yaw_rate is clockwise-positive (flight-controller NED convention).
    """

    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    yaw_rate: float = 0.0


@dataclass(frozen=True)
class LocalPosition:
    """Body-frame displacement command (dx forward, dy left, dz up) plus a
    relative yaw change (CCW-positive)."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    dyaw: float = 0.0


@dataclass(frozen=True)
class GlobalPosition:
    """World-frame position hold/approach with an absolute yaw command."""

    x: float
    y: float
    z: float
    yaw: float = 0.0
    speed: float | None = None  # approach-speed cap; None = platform max


Setpoint = LocalVelocity | LocalPosition | GlobalPosition


@dataclass(frozen=True)
class TrackParams:
    d0: float = 8.0  # standoff distance, m
    distance_deadband: float = 1.0
    center_threshold: float = 0.1  # normalized image fraction
    yaw_gain: float = 1.5  # rad/s per unit cx error
    approach_speed: float = 2.5


@dataclass(frozen=True)
class FollowParams:
    r0: float = 5.0  # desired radar range, m
    range_gain: float = 1.0  # scales the commanded displacement, 1/s
    max_follow_speed: float = 6.0


def track_control(obs: "TargetObservation", p: TrackParams) -> LocalVelocity:
    """Rotate-to-center with a distance deadband around D0.

    Yaw rotates only while the box center is outside the center threshold;
    the forward channel closes on D0 with bang-bang approach speed.
    """
    cx_err = obs.bbox[0] - 0.5
    yaw_rate = -p.yaw_gain * cx_err if abs(cx_err) > p.center_threshold else 0.0
    if obs.range > p.d0 + p.distance_deadband:
        forward = p.approach_speed
    elif obs.range < p.d0 - p.distance_deadband:
        forward = -p.approach_speed
    else:
        forward = 0.0
    return LocalVelocity(vx=forward, yaw_rate=yaw_rate)


def follow_control(obs: "TargetObservation", p: FollowParams, dt: float) -> LocalPosition:
    """Constant-distance radar following: the range error R - R0, taken along
    the camera's forward axis, is flown out as a displacement clamped so the
    implied speed over one control tick stays under the cap. Positive range
    error (too far) moves the drone forward, and vice versa."""
    raw = p.range_gain * (obs.range - p.r0)
    limit = p.max_follow_speed * dt
    dx = clamp(raw, -limit, limit)
    return LocalPosition(dx=dx, dyaw=obs.bearing)


def navigate_control(
    current: Pose, goal: tuple[float, float, float], arrival_radius: float, cruise_speed: float
) -> GlobalPosition:
    """Fly to a GPS point facing it; inside the arrival radius, hold there."""
    if arrival_radius <= 0:
        raise ValueError("arrival_radius must be > 0")
    gx, gy, gz = goal
    d = math.hypot(gx - current.x, gy - current.y)
    if d <= arrival_radius:
        return GlobalPosition(gx, gy, gz, current.yaw, speed=cruise_speed)
    return GlobalPosition(gx, gy, gz, math.atan2(gy - current.y, gx - current.x), speed=cruise_speed)


def reached(current: Pose, goal: tuple[float, float, float], arrival_radius: float) -> bool:
    return math.hypot(goal[0] - current.x, goal[1] - current.y) <= arrival_radius


def search_control(
    pattern: list[tuple[float, float]],
    progress: int,
    current: Pose,
    altitude: float,
    arrival_radius: float = 5.0,
    cruise_speed: float | None = None,
) -> tuple[GlobalPosition, int, bool]:
    """Fly the waypoint loop, advancing on arrival and wrapping at the end.

    Returns (setpoint, new progress, arrived-this-call).
    """
    if not pattern:
        raise ValueError("search pattern is empty")
    progress %= len(pattern)
    wx, wy = pattern[progress]
    arrived = math.hypot(wx - current.x, wy - current.y) <= arrival_radius
    if arrived:
        progress = (progress + 1) % len(pattern)
        wx, wy = pattern[progress]
    sp = navigate_control(current, (wx, wy, altitude), arrival_radius, cruise_speed)
    return sp, progress, arrived


def separation_overlay(
    setpoint: Setpoint,
    neighbors: list[tuple[float, float]],
    min_sep: float,
    repulse_gain: float,
    dt: float = 0.05,
    pose: Pose | None = None,
    max_speed: float = 8.0,
    approach_gain: float = 1.5,
) -> Setpoint:
    """Add a potential-field repulsion away from neighbors inside min_sep.

    Neighbors are (range, bearing) pairs relative to the drone; the repulsion
    adds to the setpoint's velocity-equivalent command. A GlobalPosition
    setpoint is converted to the velocity command it implies (which needs the
    current pose) so the repulsion actually deflects the flight path. The
    overlay is an identity when nobody is within min_sep.
    """
    if min_sep <= 0:
        raise ValueError("min_sep must be > 0")
    rx = ry = 0.0  # body frame: x forward, y left
    for rng, bearing in neighbors:
        if rng >= min_sep:
            continue
        mag = repulse_gain * (1.0 - rng / min_sep)
        rx -= mag * math.cos(bearing)
        ry -= mag * math.sin(bearing)
    if rx == 0.0 and ry == 0.0:
        return setpoint
    if isinstance(setpoint, LocalVelocity):
        return LocalVelocity(setpoint.vx + rx, setpoint.vy + ry, setpoint.vz, setpoint.yaw_rate)
    if isinstance(setpoint, LocalPosition):
        return LocalPosition(setpoint.dx + rx * dt, setpoint.dy + ry * dt, setpoint.dz, setpoint.dyaw)
    if isinstance(setpoint, GlobalPosition):
        if pose is None:
            raise ValueError("GlobalPosition overlay needs the current pose")
        dx, dy, dz = setpoint.x - pose.x, setpoint.y - pose.y, setpoint.z - pose.z
        d = math.hypot(dx, dy)
        cap = max_speed if setpoint.speed is None else min(setpoint.speed, max_speed)
        v = min(cap, approach_gain * d)
        wx = (dx / d * v if d > 1e-9 else 0.0)
        wy = (dy / d * v if d > 1e-9 else 0.0)
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        bx = wx * c + wy * s  # world -> body
        by = -wx * s + wy * c
        yaw_rate = -clamp(wrap_angle(setpoint.yaw - pose.yaw) / dt, -2.5, 2.5)
        return LocalVelocity(bx + rx, by + ry, clamp(dz / dt, -3.0, 3.0), yaw_rate)
    raise TypeError(f"not a setpoint: {setpoint!r}")
