"""Mode state machine and wrist-angle to velocity mapping.

The controller owns two things: the Autonomous/Teleoperated mode toggle
(driven only by recognized Circle gestures) and the proportional mapping
from roll/pitch to (v, omega). Gains are fixed by the rule that full wrist
deflection (pi/2) commands full speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .gesture import GestureClass, MatchDecision
from .imu import HALF_PI, clamp_angle

DEFAULT_V_MAX = 0.7  # m/s
DEFAULT_OMEGA_MAX = 1.0  # rad/s
DEFAULT_COMMAND_RATE_HZ = 50.0


class OperationalMode(Enum):
    AUTONOMOUS = "autonomous"
    TELEOPERATED = "teleoperated"


@dataclass(frozen=True, slots=True)
class GainConfig:
    """Proportional gains tied to the speed limits: K = limit / (pi/2)."""

    k_r: float
    k_p: float
    v_max: float
    omega_max: float
    mirror_roll: bool = False
    mirror_pitch: bool = False


def make_gains(
    v_max: float = DEFAULT_V_MAX,
    omega_max: float = DEFAULT_OMEGA_MAX,
    mirror_roll: bool = False,
    mirror_pitch: bool = False,
) -> GainConfig:
    if v_max <= 0.0 or omega_max <= 0.0:
        raise ValueError("speed limits must be positive")
    return GainConfig(
        k_r=v_max / HALF_PI,
        k_p=omega_max / HALF_PI,
        v_max=v_max,
        omega_max=omega_max,
        mirror_roll=mirror_roll,
        mirror_pitch=mirror_pitch,
    )


@dataclass(frozen=True, slots=True)
class VelocityCommand:
    v: float
    omega: float
    t_us: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v) and math.isfinite(self.omega)):
            raise ValueError("velocity command must be finite")


@dataclass(frozen=True, slots=True)
class VibrationAck:
    gesture: GestureClass


@dataclass(frozen=True, slots=True)
class ModeChanged:
    mode: OperationalMode


ControllerEvent = VibrationAck | ModeChanged


@dataclass(frozen=True, slots=True)
class ControllerState:
    """Mode + gains + when the matcher last fired (for refractory gating)."""

    mode: OperationalMode
    gains: GainConfig
    last_fire_us: int | None = None


def initial_state(gains: GainConfig | None = None) -> ControllerState:
    """Fresh controller: Autonomous until a Circle hands over control."""
    return ControllerState(
        mode=OperationalMode.AUTONOMOUS,
        gains=gains if gains is not None else make_gains(),
    )


# mode transition table, keyed by (mode, gesture); absent = stay
_TOGGLE = {
    (OperationalMode.AUTONOMOUS, GestureClass.CIRCLE): OperationalMode.TELEOPERATED,
    (OperationalMode.TELEOPERATED, GestureClass.CIRCLE): OperationalMode.AUTONOMOUS,
}


def step_mode(
    state: ControllerState, decision: MatchDecision
) -> tuple[ControllerState, list[ControllerEvent]]:
    """Advance the mode machine by one match decision.

    Every recognized gesture is acknowledged exactly once (the wearable
    buzzes). Only the Circle changes mode; the directional gestures are
    deliberately inert so future behaviors can claim them.
    """
    if decision.gesture is None:
        return state, []
    events: list[ControllerEvent] = [VibrationAck(decision.gesture)]
    next_mode = _TOGGLE.get((state.mode, decision.gesture), state.mode)
    if next_mode is not state.mode:
        events.append(ModeChanged(next_mode))
    return replace(state, mode=next_mode, last_fire_us=decision.t_us), events


def map_pose_to_velocity(
    roll: float,
    pitch: float,
    t_us: int,
    gains: GainConfig,
    mode: OperationalMode,
) -> VelocityCommand:
    """Proportional wrist mapping: v from roll, omega from pitch.

    Written in ratio form (limit * angle / (pi/2)) rather than gain *
    angle so that full deflection yields the limit exactly, with no
    floating-point shortfall. Autonomous mode always commands a stop; no
    onboard autonomy is wired in, and a stopped robot is the safe default.
    """
    if mode is OperationalMode.AUTONOMOUS:
        return VelocityCommand(0.0, 0.0, t_us)
    roll = clamp_angle(roll)
    pitch = clamp_angle(pitch)
    if gains.mirror_roll:
        roll = -roll
    if gains.mirror_pitch:
        pitch = -pitch
    v = gains.v_max * (roll / HALF_PI)
    omega = gains.omega_max * (pitch / HALF_PI)
    return VelocityCommand(v, omega, t_us)
