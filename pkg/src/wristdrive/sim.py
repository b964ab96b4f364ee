"""Differential-drive robot world: kinematics, pins, walls, scoring.

Purely kinematic. The integrator steps exact constant-input arcs, so the
trajectory is independent of the tick rate; collisions are disc-vs-disc for
pins and disc-vs-segment for walls; knocked pins stay down and never block
motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

from .controller import VelocityCommand

TAU = 2.0 * math.pi
# below this angular rate the arc step degrades to its straight-line limit
OMEGA_EPSILON = 1e-9

DEFAULT_FOOTPRINT_RADIUS = 0.35  # m
DEFAULT_PIN_RADIUS = 0.05  # m
DEFAULT_WHEEL_RADIUS = 0.05  # m
DEFAULT_WHEEL_SEPARATION = 0.30  # m
PIN_PENALTY_S = 5.0


@dataclass(frozen=True, slots=True)
class WheelParams:
    radius: float = DEFAULT_WHEEL_RADIUS
    separation: float = DEFAULT_WHEEL_SEPARATION

    def __post_init__(self) -> None:
        if self.radius <= 0.0 or self.separation <= 0.0:
            raise ValueError("wheel radius and separation must be positive")


def normalize_heading(theta: float) -> float:
    """Map any finite angle into [0, tau)."""
    out = math.fmod(theta, TAU)
    if out < 0.0:
        out += TAU
    if out >= TAU:  # fmod can land exactly on tau after the correction
        out -= TAU
    return out


@dataclass(frozen=True, slots=True)
class RobotPose:
    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)
        ):
            raise ValueError("pose components must be finite")
        # plain floats keep goal tests and serialized logs free of array scalars
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_heading(float(self.theta)))


@dataclass(frozen=True, slots=True)
class Pin:
    x: float
    y: float
    radius: float = DEFAULT_PIN_RADIUS
    standing: bool = True

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("pin radius must be positive")


@dataclass(frozen=True, slots=True)
class Wall:
    """A line segment the robot footprint cannot cross."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if (self.x1, self.y1) == (self.x2, self.y2):
            raise ValueError("wall endpoints must differ")


@dataclass(frozen=True, slots=True)
class Rect:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError("arena bounds must span a positive area")


@dataclass(frozen=True, slots=True)
class GoalLine:
    """Reached when the robot center is at or past `value` along `axis`."""

    axis: str  # "x" or "y"
    value: float
    side: str  # "above" (>=) or "below" (<=)

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y"):
            raise ValueError("goal axis must be 'x' or 'y'")
        if self.side not in ("above", "below"):
            raise ValueError("goal side must be 'above' or 'below'")


@dataclass(frozen=True, slots=True)
class AllPinsGoal:
    """Reached when every pin has been knocked down."""


@dataclass(frozen=True, slots=True)
class WaypointGoal:
    """Reached after visiting the points in order, each within `radius`."""

    points: tuple[tuple[float, float], ...]
    radius: float

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("waypoint goal needs at least one point")
        if self.radius <= 0.0:
            raise ValueError("waypoint radius must be positive")


Goal = Union[GoalLine, AllPinsGoal, WaypointGoal]


@dataclass(frozen=True, slots=True)
class PinContact:
    pin_index: int
    t_s: float


@dataclass(frozen=True, slots=True)
class WallContact:
    t_s: float


@dataclass(frozen=True, slots=True)
class GoalReached:
    t_s: float


SimEvent = Union[PinContact, WallContact, GoalReached]


@dataclass(frozen=True, slots=True)
class RunScore:
    travel_s: float
    pins_touched: int
    total_s: float


@dataclass(frozen=True, slots=True)
class World:
    """Full simulation state; step_world returns an updated copy."""

    name: str
    pose: RobotPose
    bounds: Rect
    goal: Goal
    scoring: str  # "slalom" or "plain"
    footprint_radius: float = DEFAULT_FOOTPRINT_RADIUS
    wheels: WheelParams = field(default_factory=WheelParams)
    pins: tuple[Pin, ...] = ()
    walls: tuple[Wall, ...] = ()
    elapsed_s: float = 0.0
    events: tuple[SimEvent, ...] = ()
    next_waypoint: int = 0
    goal_reached: bool = False
    in_wall_contact: bool = False

    def __post_init__(self) -> None:
        if self.scoring not in ("slalom", "plain"):
            raise ValueError("scoring must be 'slalom' or 'plain'")
        if self.footprint_radius <= 0.0:
            raise ValueError("footprint radius must be positive")

    @property
    def standing_pins(self) -> int:
        return sum(1 for p in self.pins if p.standing)


def wheel_to_body(omega_r: float, omega_l: float, p: WheelParams) -> tuple[float, float]:
    """Wheel rates to body twist: v = r(wR + wL)/2, omega = r(wR - wL)/d."""
    v = p.radius * (omega_r + omega_l) / 2.0
    omega = p.radius * (omega_r - omega_l) / p.separation
    return v, omega


def body_to_wheel(v: float, omega: float, p: WheelParams) -> tuple[float, float]:
    """Algebraic inverse of wheel_to_body."""
    omega_r = (2.0 * v + omega * p.separation) / (2.0 * p.radius)
    omega_l = (2.0 * v - omega * p.separation) / (2.0 * p.radius)
    return omega_r, omega_l


def integrate(pose: RobotPose, cmd: VelocityCommand, dt: float) -> RobotPose:
    """Exact constant-input unicycle step.

    Uses the half-angle form v*dt*sinc(h)*cos(theta+h), h = omega*dt/2,
    which equals the textbook (v/omega)(sin(theta+omega dt) - sin theta)
    arc but stays numerically stable as omega -> 0; the straight-line
    branch below OMEGA_EPSILON is its exact limit.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    v, omega, theta = cmd.v, cmd.omega, pose.theta
    if abs(omega) < OMEGA_EPSILON:
        return RobotPose(
            pose.x + v * dt * math.cos(theta),
            pose.y + v * dt * math.sin(theta),
            theta + omega * dt,
        )
    h = 0.5 * omega * dt
    chord = v * dt * (math.sin(h) / h)
    return RobotPose(
        pose.x + chord * math.cos(theta + h),
        pose.y + chord * math.sin(theta + h),
        theta + omega * dt,
    )


def _closest_point_on_segment(
    px: float, py: float, w: Wall
) -> tuple[float, float]:
    dx, dy = w.x2 - w.x1, w.y2 - w.y1
    t = ((px - w.x1) * dx + (py - w.y1) * dy) / (dx * dx + dy * dy)
    t = max(0.0, min(1.0, t))
    return w.x1 + t * dx, w.y1 + t * dy


def _resolve_walls(world: World, x: float, y: float) -> tuple[float, float, bool]:
    """Clamp (x, y) out of arena borders and wall footprints.

    Returns the corrected center and whether any correction was applied.
    Two passes over the wall list settle the common corner cases where one
    push-out violates a neighboring constraint.
    """
    contact = False
    b = world.bounds
    cx = min(max(x, b.x_min), b.x_max)
    cy = min(max(y, b.y_min), b.y_max)
    contact = contact or (cx != x) or (cy != y)

    r = world.footprint_radius
    for _ in range(2):
        moved = False
        for w in world.walls:
            qx, qy = _closest_point_on_segment(cx, cy, w)
            dx, dy = cx - qx, cy - qy
            dist = math.hypot(dx, dy)
            if dist >= r:
                continue
            if dist == 0.0:
                # center exactly on the wall: push along the segment normal
                nx, ny = -(w.y2 - w.y1), (w.x2 - w.x1)
                norm = math.hypot(nx, ny)
                dx, dy, dist = nx / norm, ny / norm, 1.0
            cx = qx + dx / dist * r
            cy = qy + dy / dist * r
            moved = contact = True
        if not moved:
            break
    return cx, cy, contact


def _goal_satisfied(world: World, pose: RobotPose, next_waypoint: int) -> bool:
    g = world.goal
    if isinstance(g, GoalLine):
        coord = pose.x if g.axis == "x" else pose.y
        return coord >= g.value if g.side == "above" else coord <= g.value
    if isinstance(g, AllPinsGoal):
        return world.pins != () and all(not p.standing for p in world.pins)
    return next_waypoint >= len(g.points)


def step_world(
    world: World, cmd: VelocityCommand, dt: float
) -> tuple[World, list[SimEvent]]:
    """Advance one tick: integrate, collide, knock pins, test the goal."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    t_s = world.elapsed_s + dt
    moved = integrate(world.pose, cmd, dt)
    cx, cy, contact = _resolve_walls(world, moved.x, moved.y)
    pose = RobotPose(cx, cy, moved.theta)

    new_events: list[SimEvent] = []
    if contact and not world.in_wall_contact:
        new_events.append(WallContact(t_s))

    pins = list(world.pins)
    reach = world.footprint_radius
    for i, pin in enumerate(pins):
        if not pin.standing:
            continue
        if math.hypot(pose.x - pin.x, pose.y - pin.y) < reach + pin.radius:
            pins[i] = replace(pin, standing=False)
            new_events.append(PinContact(i, t_s))

    next_wp = world.next_waypoint
    if isinstance(world.goal, WaypointGoal):
        while next_wp < len(world.goal.points):
            wx, wy = world.goal.points[next_wp]
            if math.hypot(pose.x - wx, pose.y - wy) <= world.goal.radius:
                next_wp += 1
            else:
                break

    probe = replace(world, pins=tuple(pins))
    goal_now = world.goal_reached or _goal_satisfied(probe, pose, next_wp)
    if goal_now and not world.goal_reached:
        new_events.append(GoalReached(t_s))

    updated = replace(
        world,
        pose=pose,
        pins=tuple(pins),
        elapsed_s=t_s,
        events=world.events + tuple(new_events),
        next_waypoint=next_wp,
        goal_reached=goal_now,
        in_wall_contact=contact,
    )
    return updated, new_events


def score_run(
    events: tuple[SimEvent, ...] | list[SimEvent], scoring: str, travel_s: float
) -> RunScore:
    """Fold a run's events into its score.

    Slalom scoring adds a fixed time penalty per touched pin; plain scoring
    is travel time alone (knocking pins is the objective there, or walls
    already punish the detour).
    """
    if travel_s < 0.0:
        raise ValueError("travel_s must be >= 0")
    if scoring not in ("slalom", "plain"):
        raise ValueError("scoring must be 'slalom' or 'plain'")
    pins = sum(1 for e in events if isinstance(e, PinContact))
    total = travel_s + PIN_PENALTY_S * pins if scoring == "slalom" else travel_s
    return RunScore(travel_s=travel_s, pins_touched=pins, total_s=total)
