"""Scenario files and the three built-in course layouts.

A scenario file is one JSON object: arena bounds, wall segments, pins,
start pose, goal definition, scoring mode. The built-in layouts (slalom
lane, target ring, two-room building) are fixture geometry; files override
them completely.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import DataError
from .sim import (
    AllPinsGoal,
    DEFAULT_FOOTPRINT_RADIUS,
    DEFAULT_PIN_RADIUS,
    Goal,
    GoalLine,
    Pin,
    Rect,
    RobotPose,
    Wall,
    WaypointGoal,
    WheelParams,
    World,
)


class ScenarioError(DataError):
    pass


# Slalom: a 3.3 x 9.0 m lane with 7 pins down the centerline at 1.125 m
# spacing; run from the near short end, finish past the far line.
_SLALOM_PIN_SPACING = 1.125


def _slalom() -> dict:
    return {
        "name": "slalom",
        "arena": {"x_min": 0.0, "x_max": 3.3, "y_min": 0.0, "y_max": 9.0},
        "pins": [
            {"x": 1.65, "y": _SLALOM_PIN_SPACING * k, "radius": DEFAULT_PIN_RADIUS}
            for k in range(1, 8)
        ],
        "start": {"x": 1.65, "y": 0.45, "theta": math.pi / 2},
        "goal": {"type": "line", "axis": "y", "value": 8.5, "side": "above"},
        "scoring": "slalom",
    }


def _targets() -> dict:
    # 7 targets on a ring, visited by knocking their pins down
    cx, cy, ring = 3.0, 3.0, 2.0
    return {
        "name": "targets",
        "arena": {"x_min": 0.0, "x_max": 6.0, "y_min": 0.0, "y_max": 6.0},
        "pins": [
            {
                "x": cx + ring * math.cos(2.0 * math.pi * k / 7.0),
                "y": cy + ring * math.sin(2.0 * math.pi * k / 7.0),
                "radius": DEFAULT_PIN_RADIUS,
            }
            for k in range(7)
        ],
        "start": {"x": cx, "y": cy, "theta": 0.0},
        "goal": {"type": "all_pins"},
        "scoring": "plain",
    }


def _building() -> dict:
    # corridor along the south side, two rooms above it split by a center
    # wall; doorways are 1.2 m, comfortably wider than the robot
    return {
        "name": "building",
        "arena": {"x_min": 0.0, "x_max": 8.0, "y_min": 0.0, "y_max": 6.0},
        "walls": [
            {"x1": 0.0, "y1": 1.5, "x2": 1.4, "y2": 1.5},
            {"x1": 2.6, "y1": 1.5, "x2": 5.4, "y2": 1.5},
            {"x1": 6.6, "y1": 1.5, "x2": 8.0, "y2": 1.5},
            {"x1": 4.0, "y1": 1.5, "x2": 4.0, "y2": 6.0},
        ],
        "pins": [],
        "start": {"x": 0.5, "y": 0.75, "theta": 0.0},
        "goal": {
            "type": "waypoints",
            "points": [
                {"x": 2.0, "y": 4.0},
                {"x": 6.0, "y": 4.0},
                {"x": 7.5, "y": 0.75},
            ],
            "radius": 0.4,
        },
        "scoring": "plain",
    }


_BUILTINS = {"slalom": _slalom, "targets": _targets, "building": _building}

BUILTIN_NAMES = tuple(sorted(_BUILTINS))


def _require(doc: dict, key: str, ctx: str) -> object:
    if key not in doc:
        raise ScenarioError(f"{ctx}: missing required field {key!r}")
    return doc[key]


def _number(doc: dict, key: str, ctx: str) -> float:
    v = _require(doc, key, ctx)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{ctx}: field {key!r} must be a number")
    return float(v)


def _parse_goal(doc: object) -> Goal:
    if not isinstance(doc, dict):
        raise ScenarioError("goal: must be an object")
    kind = _require(doc, "type", "goal")
    if kind == "line":
        return GoalLine(
            axis=str(_require(doc, "axis", "goal")),
            value=_number(doc, "value", "goal"),
            side=str(_require(doc, "side", "goal")),
        )
    if kind == "all_pins":
        return AllPinsGoal()
    if kind == "waypoints":
        raw = _require(doc, "points", "goal")
        if not isinstance(raw, list) or not raw:
            raise ScenarioError("goal: 'points' must be a non-empty list")
        points = tuple(
            (_number(p, "x", f"goal point {i}"), _number(p, "y", f"goal point {i}"))
            for i, p in enumerate(raw)
        )
        return WaypointGoal(points=points, radius=_number(doc, "radius", "goal"))
    raise ScenarioError(f"goal: unknown type {kind!r}")


def world_from_mapping(doc: dict) -> World:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario root must be an object")
    name = str(_require(doc, "name", "scenario"))

    arena = _require(doc, "arena", "scenario")
    if not isinstance(arena, dict):
        raise ScenarioError("arena: must be an object")
    try:
        bounds = Rect(
            x_min=_number(arena, "x_min", "arena"),
            x_max=_number(arena, "x_max", "arena"),
            y_min=_number(arena, "y_min", "arena"),
            y_max=_number(arena, "y_max", "arena"),
        )
    except ValueError as exc:
        raise ScenarioError(f"arena: {exc}") from exc

    start = _require(doc, "start", "scenario")
    if not isinstance(start, dict):
        raise ScenarioError("start: must be an object")
    pose = RobotPose(
        x=_number(start, "x", "start"),
        y=_number(start, "y", "start"),
        theta=_number(start, "theta", "start"),
    )

    pins = []
    for i, p in enumerate(doc.get("pins", [])):
        if not isinstance(p, dict):
            raise ScenarioError(f"pin {i}: must be an object")
        try:
            pins.append(
                Pin(
                    x=_number(p, "x", f"pin {i}"),
                    y=_number(p, "y", f"pin {i}"),
                    radius=_number(p, "radius", f"pin {i}")
                    if "radius" in p
                    else DEFAULT_PIN_RADIUS,
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"pin {i}: {exc}") from exc

    walls = []
    for i, w in enumerate(doc.get("walls", [])):
        if not isinstance(w, dict):
            raise ScenarioError(f"wall {i}: must be an object")
        try:
            walls.append(
                Wall(
                    x1=_number(w, "x1", f"wall {i}"),
                    y1=_number(w, "y1", f"wall {i}"),
                    x2=_number(w, "x2", f"wall {i}"),
                    y2=_number(w, "y2", f"wall {i}"),
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"wall {i}: {exc}") from exc

    scoring = _require(doc, "scoring", "scenario")
    if scoring not in ("slalom", "plain"):
        raise ScenarioError(f"scenario: unknown scoring mode {scoring!r}")

    footprint = (
        _number(doc, "footprint_radius", "scenario")
        if "footprint_radius" in doc
        else DEFAULT_FOOTPRINT_RADIUS
    )
    if "wheels" in doc:
        wd = doc["wheels"]
        if not isinstance(wd, dict):
            raise ScenarioError("wheels: must be an object")
        try:
            wheels = WheelParams(
                radius=_number(wd, "radius", "wheels"),
                separation=_number(wd, "separation", "wheels"),
            )
        except ValueError as exc:
            raise ScenarioError(f"wheels: {exc}") from exc
    else:
        wheels = WheelParams()

    try:
        return World(
            name=name,
            pose=pose,
            bounds=bounds,
            goal=_parse_goal(_require(doc, "goal", "scenario")),
            scoring=str(scoring),
            footprint_radius=footprint,
            wheels=wheels,
            pins=tuple(pins),
            walls=tuple(walls),
        )
    except ValueError as exc:
        raise ScenarioError(f"scenario: {exc}") from exc


def load_scenario(source: str | Path) -> World:
    """Build a world from a built-in name or a scenario file path."""
    key = str(source)
    if key in _BUILTINS:
        return world_from_mapping(_BUILTINS[key]())
    path = Path(source)
    if not path.exists():
        raise ScenarioError(
            f"unknown scenario {key!r}: not a built-in "
            f"({', '.join(BUILTIN_NAMES)}) and no such file"
        )
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in scenario file: {exc}") from exc
    return world_from_mapping(doc)


def scenario_geometry(world: World) -> dict:
    """JSON-friendly static geometry (for telemetry handshakes and tools)."""
    goal: dict
    if isinstance(world.goal, GoalLine):
        goal = {
            "type": "line",
            "axis": world.goal.axis,
            "value": world.goal.value,
            "side": world.goal.side,
        }
    elif isinstance(world.goal, AllPinsGoal):
        goal = {"type": "all_pins"}
    else:
        goal = {
            "type": "waypoints",
            "points": [{"x": x, "y": y} for x, y in world.goal.points],
            "radius": world.goal.radius,
        }
    return {
        "name": world.name,
        "arena": {
            "x_min": world.bounds.x_min,
            "x_max": world.bounds.x_max,
            "y_min": world.bounds.y_min,
            "y_max": world.bounds.y_max,
        },
        "walls": [
            {"x1": w.x1, "y1": w.y1, "x2": w.x2, "y2": w.y2} for w in world.walls
        ],
        "pins": [{"x": p.x, "y": p.y, "radius": p.radius} for p in world.pins],
        "start": {"x": world.pose.x, "y": world.pose.y, "theta": world.pose.theta},
        "goal": goal,
        "scoring": world.scoring,
        "footprint_radius": world.footprint_radius,
    }
