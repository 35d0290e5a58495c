"""Planar/3D geometry helpers shared by the simulation modules.

Conventions: world frame is x-east / y-north / z-up in meters, yaw is
counter-clockwise-positive measured from the +x axis. Bearings are relative
to the observer yaw and wrapped to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x + o.x, self.y + o.y, self.z + o.z)

    def __sub__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x - o.x, self.y - o.y, self.z - o.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def norm2d(self) -> float:
        return math.hypot(self.x, self.y)

    def clamped(self, max_norm: float) -> "Vec3":
        n = self.norm()
        if n <= max_norm or n == 0.0:
            return self
        return self.scaled(max_norm / n)


@dataclass(frozen=True)
class Pose:
    """Position plus heading. yaw in radians, CCW from +x."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0

    @property
    def position(self) -> Vec3:
        return Vec3(self.x, self.y, self.z)


def dist2d(ax: float, ay: float, bx: float, by: float) -> float:
    return math.hypot(bx - ax, by - ay)


def dist3d(a: Vec3, b: Vec3) -> float:
    return math.sqrt((b.x - a.x) ** 2 + (b.y - a.y) ** 2 + (b.z - a.z) ** 2)


def body_to_world(yaw: float, fx: float, fy: float) -> tuple[float, float]:
    """Rotate a body-frame vector (x forward, y left) into the world frame."""
    c, s = math.cos(yaw), math.sin(yaw)
    return fx * c - fy * s, fx * s + fy * c


def relative_spherical(observer: Pose, target: Vec3) -> tuple[float, float, float]:
    """(range, bearing, elevation) of target as seen from observer.

    Bearing is measured from the observer yaw, CCW-positive, wrapped to
    (-pi, pi]. Elevation is atan2(dz, horizontal distance).
    """
    dx = target.x - observer.x
    dy = target.y - observer.y
    dz = target.z - observer.z
    horiz = math.hypot(dx, dy)
    rng = math.sqrt(horiz * horiz + dz * dz)
    bearing = wrap_angle(math.atan2(dy, dx) - observer.yaw)
    elevation = math.atan2(dz, horiz)
    return rng, bearing, elevation
