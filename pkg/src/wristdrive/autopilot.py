"""Scripted waypoint pilot that stands in for the human operator.

The pilot deliberately emits wrist angles, not velocities: its desired
(v, omega) from pure pursuit are divided back through the speed limits into
roll/pitch deflections, so every command it causes still flows through the
same angle-to-velocity mapping a human's wrist would drive. Route fixtures
for the built-in scenarios live in DEFAULT_ROUTES; the slalom weave is
tuned until the run is contact-free, then frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .imu import HALF_PI, OrientationEstimate, clamp_angle
from .sim import RobotPose, World

_WEAVE_OFFSET = 0.9  # lateral swing around the slalom centerline, m


@dataclass(frozen=True, slots=True)
class AutopilotConfig:
    waypoints: tuple[tuple[float, float], ...]
    lookahead_m: float = 0.6
    angular_gain: float = 2.5  # 1/s
    capture_radius_m: float = 0.25
    v_max: float = 0.7
    omega_max: float = 1.0
    cruise_speed: float | None = None  # travel speed target; None rides v_max

    def __post_init__(self) -> None:
        if self.lookahead_m <= 0.0:
            raise ValueError("lookahead must be positive")
        if self.capture_radius_m <= 0.0:
            raise ValueError("capture radius must be positive")
        if not self.waypoints:
            raise ValueError("route needs at least one waypoint")
        if self.cruise_speed is not None and not 0.0 < self.cruise_speed <= self.v_max:
            raise ValueError("cruise speed must lie in (0, v_max]")


def wrap_to_pi(angle: float) -> float:
    out = math.fmod(angle + math.pi, 2.0 * math.pi)
    if out < 0.0:
        out += 2.0 * math.pi
    return out - math.pi


class Autopilot:
    """Pure-pursuit waypoint chaser emitting wrist-angle estimates."""

    def __init__(self, config: AutopilotConfig):
        self.config = config
        self.next_index = 0

    @property
    def done(self) -> bool:
        return self.next_index >= len(self.config.waypoints)

    def step(self, pose: RobotPose, t_us: int) -> OrientationEstimate:
        cfg = self.config
        while not self.done:
            tx, ty = cfg.waypoints[self.next_index]
            if math.hypot(pose.x - tx, pose.y - ty) <= cfg.capture_radius_m:
                self.next_index += 1
            else:
                break
        if self.done:
            return OrientationEstimate(0.0, 0.0, t_us)

        tx, ty = cfg.waypoints[self.next_index]
        dx, dy = tx - pose.x, ty - pose.y
        dist = math.hypot(dx, dy)
        heading_error = wrap_to_pi(math.atan2(dy, dx) - pose.theta)

        omega_des = max(-cfg.omega_max, min(cfg.omega_max, cfg.angular_gain * heading_error))
        cruise = cfg.v_max if cfg.cruise_speed is None else cfg.cruise_speed
        v_des = cruise * max(0.0, math.cos(heading_error))
        if self.next_index == len(cfg.waypoints) - 1:
            # ease into the final point instead of orbiting it
            v_des *= min(1.0, dist / cfg.lookahead_m)

        # invert the wrist mapping: angle = (speed / limit) * (pi/2)
        roll = clamp_angle((v_des / cfg.v_max) * HALF_PI)
        pitch = clamp_angle((omega_des / cfg.omega_max) * HALF_PI)
        return OrientationEstimate(roll, pitch, t_us)


def _slalom_route() -> tuple[tuple[float, float], ...]:
    # lead-in starts the swing before the first pin row (the start pose
    # leaves only 0.675 m of runway), then alternate sides with a
    # centerline crossing between pins and run out through the goal line
    center_x = 1.65
    pin_ys = [1.125 * k for k in range(1, 8)]
    pts: list[tuple[float, float]] = [(0.95, 0.6)]
    side = -1.0
    prev_y = 0.45
    for index, y in enumerate(pin_ys):
        if index > 0:
            pts.append((center_x, (prev_y + y) / 2.0))
        pts.append((center_x + side * _WEAVE_OFFSET, y))
        prev_y = y
        side = -side
    pts.append((center_x, (pin_ys[-1] + 9.0) / 2.0))
    pts.append((center_x, 8.8))
    return tuple(pts)


def _targets_route() -> tuple[tuple[float, float], ...]:
    cx, cy, ring = 3.0, 3.0, 2.0
    return tuple(
        (
            cx + ring * math.cos(2.0 * math.pi * k / 7.0),
            cy + ring * math.sin(2.0 * math.pi * k / 7.0),
        )
        for k in range(7)
    )


def _building_route() -> tuple[tuple[float, float], ...]:
    return (
        (2.0, 0.75),
        (2.0, 2.4),
        (2.0, 4.0),
        (2.0, 2.4),
        (2.0, 0.75),
        (6.0, 0.75),
        (6.0, 2.4),
        (6.0, 4.0),
        (6.0, 2.4),
        (6.0, 0.75),
        (7.5, 0.75),
    )


DEFAULT_ROUTES: dict[str, tuple[tuple[float, float], ...]] = {
    "slalom": _slalom_route(),
    "targets": _targets_route(),
    "building": _building_route(),
}

# per-route pilot tuning, frozen once the course runs clean
_ROUTE_TUNING: dict[str, dict[str, float]] = {
    "slalom": {"cruise_speed": 0.45, "angular_gain": 3.0, "capture_radius_m": 0.3},
}


def pilot_for(world: World, v_max: float, omega_max: float) -> Autopilot:
    """Default pilot for a world: named route fixture or the goal geometry."""
    route = DEFAULT_ROUTES.get(world.name)
    if route is None:
        route = _route_from_goal(world)
    tuning = _ROUTE_TUNING.get(world.name, {})
    if "cruise_speed" in tuning and tuning["cruise_speed"] > v_max:
        tuning = {k: v for k, v in tuning.items() if k != "cruise_speed"}
    return Autopilot(
        AutopilotConfig(waypoints=route, v_max=v_max, omega_max=omega_max, **tuning)
    )


def _route_from_goal(world: World) -> tuple[tuple[float, float], ...]:
    from .sim import AllPinsGoal, GoalLine, WaypointGoal

    g = world.goal
    if isinstance(g, WaypointGoal):
        return g.points
    if isinstance(g, AllPinsGoal):
        return tuple((p.x, p.y) for p in world.pins if p.standing)
    if isinstance(g, GoalLine):
        x, y = world.pose.x, world.pose.y
        if g.axis == "x":
            return ((g.value + (0.3 if g.side == "above" else -0.3), y),)
        return ((x, g.value + (0.3 if g.side == "above" else -0.3)),)
    raise ValueError(f"no route strategy for goal {type(g).__name__}")
