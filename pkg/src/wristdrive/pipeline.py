"""Per-sample processing: orientation filtering, gesture matching, mode
stepping, and command emission, glued into one deterministic object.

One Processor owns one operator stream. Each ingested sample advances the
complementary filter, lands in the signal window, is scored against the
templates (refractory-gated), may toggle the mode, and yields at most one
velocity command, paced by the configured command rate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ControlConfig
from .controller import (
    ControllerEvent,
    ControllerState,
    OperationalMode,
    VelocityCommand,
    initial_state,
    map_pose_to_velocity,
    step_mode,
)
from .gesture import GestureTemplate, MatchDecision, match_window
from .imu import (
    DEFAULT_FILTER_ALPHA,
    ImuSample,
    IndeterminateOrientationError,
    OrientationEstimate,
    SignalWindow,
    StaleSampleError,
    accel_to_roll_pitch,
    update_orientation,
)


@dataclass(frozen=True, slots=True)
class ProcessorOutput:
    """Everything one sample produced."""

    estimate: OrientationEstimate
    decision: MatchDecision | None
    events: tuple[ControllerEvent, ...]
    command: VelocityCommand | None


class Processor:
    """Deterministic sample-to-command pipeline for one operator."""

    def __init__(
        self,
        templates: list[GestureTemplate],
        config: ControlConfig | None = None,
        alpha: float = DEFAULT_FILTER_ALPHA,
    ):
        self.config = config if config is not None else ControlConfig()
        self.templates = list(templates)
        self.alpha = alpha
        window_len = max((len(t) for t in self.templates), default=2)
        self.window = SignalWindow(capacity=window_len)
        self.state: ControllerState = initial_state(self.config.gains())
        self.estimate: OrientationEstimate | None = None
        self._last_fire_us: int | None = None
        self._last_cmd_us: int | None = None
        self._cmd_period_us = int(round(1e6 / self.config.command_rate_hz))
        self.samples_seen = 0
        self.stale_dropped = 0

    @property
    def mode(self) -> OperationalMode:
        return self.state.mode

    def ingest(self, sample: ImuSample) -> ProcessorOutput:
        """Advance every stage by one sample.

        Out-of-order samples are dropped (counted, no state change) and
        reported as a no-op output.
        """
        prev = self.estimate
        try:
            self.window.push(sample)
        except StaleSampleError:
            self.stale_dropped += 1
            est = prev if prev is not None else OrientationEstimate(0.0, 0.0, sample.t_us)
            return ProcessorOutput(est, None, (), None)
        self.samples_seen += 1

        if prev is None:
            try:
                roll, pitch = accel_to_roll_pitch(sample)
            except IndeterminateOrientationError:
                roll, pitch = 0.0, 0.0
            est = OrientationEstimate(roll, pitch, sample.t_us)
        else:
            dt = (sample.t_us - prev.t_us) / 1e6
            est = update_orientation(prev, sample, dt, self.alpha)
        self.estimate = est

        decision = None
        events: tuple[ControllerEvent, ...] = ()
        if len(self.window) >= min((len(t) for t in self.templates), default=2):
            decision = match_window(
                self.window,
                self.templates,
                threshold=self.config.gesture_threshold,
                refractory_s=self.config.refractory_s,
                last_fire_us=self._last_fire_us,
            )
            if decision.gesture is not None:
                self._last_fire_us = decision.t_us
                self.state, evs = step_mode(self.state, decision)
                events = tuple(evs)

        command = None
        if (
            self._last_cmd_us is None
            or sample.t_us - self._last_cmd_us >= self._cmd_period_us
        ):
            command = map_pose_to_velocity(
                est.roll, est.pitch, sample.t_us, self.state.gains, self.state.mode
            )
            self._last_cmd_us = sample.t_us

        return ProcessorOutput(est, decision, events, command)
