"""Sensor model producing the sparse per-target observation vector.

The camera/radar/infrared stack is collapsed into one parametric visibility
and noise model: field-of-view plus range gating, a Bernoulli detection draw
whose probability falls off linearly with range, and Gaussian radar range
noise. Persons riding inside a car are never emitted.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .geometry import clamp, relative_spherical, wrap_angle
from .world import EntityKind, WorldState

# Apparent metric sizes used only to give bounding boxes a plausible extent.
_CLASS_WIDTH = {EntityKind.PERSON: 0.6, EntityKind.CAR: 4.2}
_CLASS_HEIGHT = {EntityKind.PERSON: 1.7, EntityKind.CAR: 1.5}


@dataclass(frozen=True)
class SensorSuite:
    rgb_fov: float = math.pi / 2  # horizontal, rad
    rgb_max_range: float = 60.0
    depth_max_range: float = 40.0
    radar_max_range: float = 60.0
    radar_range_sigma: float = 0.15
    detect_prob_base: float = 0.95
    dark_side_penalty: float = 0.5
    rate: float = 5.0  # Hz

    def max_range_for(self, kind: EntityKind) -> float:
        # Persons are camera-limited; cars have enough radar cross-section
        # to be picked up out to radar range.
        return self.rgb_max_range if kind is EntityKind.PERSON else self.radar_max_range


@dataclass(frozen=True)
class TargetObservation:
    target_class: str  # "Person" | "Car" | "Unknown"
    confidence: float
    bbox: tuple[float, float, float, float]  # normalized (cx, cy, w, h)
    range: float
    bearing: float
    geolocation: tuple[float, float, float]
    stamp: float
    observed_id: str  # ground-truth id; for tests/lock identity, not policy


@dataclass(frozen=True)
class TargetLock:
    locked_id: str | None = None
    acquired_at: float = 0.0
    last_seen: float = 0.0


_CLASS_NAME = {EntityKind.PERSON: "Person", EntityKind.CAR: "Car"}


def detect_prob(rng_m: float, suite: SensorSuite, dark_side: bool = False) -> float:
    """Detection probability: base, linear falloff to zero at camera range,
    times the dark-side penalty when applicable."""
    if rng_m < 0:
        raise ValueError("range must be >= 0")
    p = suite.detect_prob_base * clamp(1.0 - rng_m / suite.rgb_max_range, 0.0, 1.0)
    if dark_side:
        p *= suite.dark_side_penalty
    return clamp(p, 0.0, 1.0)


def _is_dark_side(state: WorldState, observer: str, target: str) -> bool:
    """A car viewed from its rear quadrant counts as a dark-side sighting."""
    tgt = state.entities[target]
    if tgt.kind is not EntityKind.CAR:
        return False
    obs = state.entities[observer]
    back = wrap_angle(math.atan2(obs.pose.y - tgt.pose.y, obs.pose.x - tgt.pose.x) - tgt.pose.yaw)
    return abs(back) > 3.0 * math.pi / 4.0


def sense(
    state: WorldState, drone: str, suite: SensorSuite, rng: random.Random
) -> list[TargetObservation]:
    """Emit one observation per visible Person/Car target.

    Emission order is ground-truth id order, which makes the "first seen"
    lock rule deterministic. The RNG is consumed once per candidate in that
    same order (a detection draw, then range noise for detected targets).
    """
    me = state.entities[drone]
    out: list[TargetObservation] = []
    for eid in sorted(state.entities):
        ent = state.entities[eid]
        if ent.kind not in (EntityKind.PERSON, EntityKind.CAR):
            continue
        if ent.carried_by is not None:
            continue
        rng_m, bearing, elevation = relative_spherical(me.pose, ent.pose.position)
        if rng_m > suite.max_range_for(ent.kind):
            continue
        if abs(bearing) > suite.rgb_fov / 2.0:
            continue
        p = detect_prob(rng_m, suite, _is_dark_side(state, drone, eid))
        if rng.random() >= p:
            continue
        noisy_range = max(0.05, rng_m + rng.gauss(0.0, suite.radar_range_sigma))
        cx = 0.5 + bearing / suite.rgb_fov
        cy = clamp(0.5 - elevation / suite.rgb_fov, 0.0, 1.0)
        w = clamp(_CLASS_WIDTH[ent.kind] / (rng_m * suite.rgb_fov + 1e-9), 0.005, 1.0)
        h = clamp(_CLASS_HEIGHT[ent.kind] / (rng_m * suite.rgb_fov + 1e-9), 0.005, 1.0)
        horiz = noisy_range * math.cos(elevation)
        ang = me.pose.yaw + bearing
        geo = (
            me.pose.x + horiz * math.cos(ang),
            me.pose.y + horiz * math.sin(ang),
            me.pose.z + noisy_range * math.sin(elevation),
        )
        out.append(
            TargetObservation(
                target_class=_CLASS_NAME[ent.kind],
                confidence=p,
                bbox=(cx, cy, w, h),
                range=noisy_range,
                bearing=bearing,
                geolocation=geo,
                stamp=state.time,
                observed_id=eid,
            )
        )
    return out


def update_lock(
    lock: TargetLock,
    obs: list[TargetObservation],
    wanted_class: str,
    time: float,
    lost_timeout: float,
) -> TargetLock:
    """First-seen single-target lock with a re-acquisition timeout.

    An empty lock grabs the first observation of the wanted class in
    emission order; a held lock refreshes on a matching observation and is
    cleared after lost_timeout seconds unseen.
    """
    if lost_timeout <= 0:
        raise ValueError("lost_timeout must be > 0")
    if lock.locked_id is None:
        for o in obs:
            if o.target_class == wanted_class:
                return TargetLock(o.observed_id, acquired_at=time, last_seen=time)
        return lock
    for o in obs:
        if o.observed_id == lock.locked_id:
            return replace(lock, last_seen=time)
    if time - lock.last_seen > lost_timeout:
        return TargetLock()
    return lock
