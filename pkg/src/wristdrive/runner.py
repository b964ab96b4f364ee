"""Headless runs: scenario simulation with the scripted pilot, trace
replay, and template training.

A scenario run has two phases. The preamble streams a synthesized Circle
repetition through the full recognition pipeline, so the hand-over to
Teleoperated happens the same way it would for a live operator (matcher,
ack, mode toggle). The drive phase then lets the waypoint pilot steer by
emitting wrist angles through the same angle-to-velocity mapping. The
travel clock starts at the first nonzero command, which is the first drive
tick; every event lands in a JSONL log from which the report is exactly
recomputable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .autopilot import Autopilot, pilot_for
from .config import ControlConfig
from .controller import (
    ModeChanged,
    OperationalMode,
    VibrationAck,
    map_pose_to_velocity,
)
from .errors import DataError
from .gesture import (
    GestureClass,
    GestureTemplate,
    build_template,
    canonical_templates,
    epoch_to_samples,
    extract_epochs,
    read_sidecar,
    save_templates,
    synthesize_gesture,
)
from .imu import ImuSample, read_trace
from .pipeline import Processor
from .sim import GoalReached, PinContact, WallContact, World, score_run, step_world
from .scenarios import load_scenario

GRAVITY = 9.81
DEFAULT_TICK_HZ = 50.0
DEFAULT_TIMEOUT_S = 300.0
PREAMBLE_REST_S = 0.5
PREAMBLE_NOISE_SIGMA = 0.05


@dataclass(frozen=True, slots=True)
class Detection:
    gesture: str
    t_us: int
    score: float


@dataclass(frozen=True, slots=True)
class RunReport:
    scenario: str
    travel_s: float
    pins_touched: int
    total_s: float
    goal_reached: bool
    command_count: int
    detections: tuple[Detection, ...]

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario,
            "travel_s": round(self.travel_s, 6),
            "pins_touched": self.pins_touched,
            "total_s": round(self.total_s, 6),
            "goal_reached": self.goal_reached,
            "command_count": self.command_count,
            "detections": [
                {"gesture": d.gesture, "t_us": d.t_us, "score": round(d.score, 9)}
                for d in self.detections
            ],
        }
        return json.dumps(doc, sort_keys=True)


class EventLog:
    """Collects one JSON record per run event; optionally mirrors to a file."""

    def __init__(self) -> None:
        self.records: list[dict] = []

    def add(self, **record) -> None:
        self.records.append(record)

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _rest_samples(start_us: int, count: int, step_us: int) -> list[ImuSample]:
    return [
        ImuSample(
            t_us=start_us + i * step_us,
            accel=(0.0, 0.0, GRAVITY),
            gyro=(0.0, 0.0, 0.0),
        )
        for i in range(count)
    ]


def run_scenario(
    scenario: str | Path | World,
    config: ControlConfig | None = None,
    templates: list[GestureTemplate] | None = None,
    seed: int = 0,
    tick_hz: float = DEFAULT_TICK_HZ,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    log: EventLog | None = None,
) -> RunReport:
    """Drive one scenario to its goal with the scripted pilot."""
    if tick_hz <= 0.0:
        raise ValueError("tick_hz must be positive")
    world = scenario if isinstance(scenario, World) else load_scenario(scenario)
    config = config if config is not None else ControlConfig()
    templates = templates if templates is not None else canonical_templates()
    log = log if log is not None else EventLog()
    log.add(type="run_header", scenario=world.name, scoring=world.scoring, seed=seed)

    proc = Processor(templates, config)
    step_us = int(round(1e6 / tick_hz))
    dt = step_us / 1e6

    # preamble: rest, then one synthesized Circle through the real matcher
    detections: list[Detection] = []
    rest = _rest_samples(0, int(PREAMBLE_REST_S * tick_hz), step_us)
    circle = synthesize_gesture(
        GestureClass.CIRCLE, rng_seed=seed, noise_sigma=PREAMBLE_NOISE_SIGMA, rate_hz=tick_hz
    )
    gesture_samples = epoch_to_samples(
        circle, start_t_us=rest[-1].t_us + step_us, base=(0.0, 0.0, GRAVITY, 0.0, 0.0, 0.0)
    )
    t_us = 0
    for sample in rest + gesture_samples:
        t_us = sample.t_us
        out = proc.ingest(sample)
        if out.decision is not None and out.decision.gesture is not None:
            d = Detection(
                out.decision.gesture.label, out.decision.t_us, out.decision.score
            )
            detections.append(d)
            log.add(type="detection", gesture=d.gesture, t_us=d.t_us, score=d.score)
        for ev in out.events:
            if isinstance(ev, VibrationAck):
                log.add(type="ack", gesture=ev.gesture.label, t_us=sample.t_us)
            elif isinstance(ev, ModeChanged):
                log.add(type="mode", mode=ev.mode.value, t_us=sample.t_us)
        if out.command is not None:
            world, _ = step_world(world, out.command, dt)
        if proc.mode is OperationalMode.TELEOPERATED:
            break
    if proc.mode is not OperationalMode.TELEOPERATED:
        raise DataError(
            "hand-over gesture not recognized by the supplied templates"
        )

    # drive phase: pilot angles -> velocity mapping -> simulator
    pilot = pilot_for(world, config.v_max, config.omega_max)
    gains = config.gains()
    command_count = 0
    travel_start_s: float | None = None
    goal_time_s: float | None = None
    max_ticks = int(timeout_s * tick_hz)
    for _ in range(max_ticks):
        t_us += step_us
        est = pilot.step(world.pose, t_us)
        cmd = map_pose_to_velocity(
            est.roll, est.pitch, t_us, gains, OperationalMode.TELEOPERATED
        )
        command_count += 1
        log.add(
            type="command",
            t_us=t_us,
            roll=est.roll,
            pitch=est.pitch,
            v=cmd.v,
            omega=cmd.omega,
        )
        if travel_start_s is None and (cmd.v != 0.0 or cmd.omega != 0.0):
            travel_start_s = world.elapsed_s
            log.add(type="travel_start", t_s=travel_start_s)
        world, events = step_world(world, cmd, dt)
        for ev in events:
            if isinstance(ev, PinContact):
                log.add(type="pin_contact", pin=ev.pin_index, t_s=ev.t_s)
            elif isinstance(ev, WallContact):
                log.add(type="wall_contact", t_s=ev.t_s)
            elif isinstance(ev, GoalReached):
                goal_time_s = ev.t_s
                log.add(type="goal", t_s=ev.t_s)
        if world.goal_reached:
            break

    if travel_start_s is None:
        travel_start_s = world.elapsed_s
    travel = (goal_time_s - travel_start_s) if goal_time_s is not None else 0.0
    score = score_run(world.events, world.scoring, travel)
    log.add(
        type="run_end",
        goal_reached=world.goal_reached,
        travel_s=score.travel_s,
        pins_touched=score.pins_touched,
        total_s=score.total_s,
        command_count=command_count,
    )
    return RunReport(
        scenario=world.name,
        travel_s=score.travel_s,
        pins_touched=score.pins_touched,
        total_s=score.total_s,
        goal_reached=world.goal_reached,
        command_count=command_count,
        detections=tuple(detections),
    )


def report_from_log(records: list[dict]) -> RunReport:
    """Recompute the report fields from a run's event records."""
    header = next((r for r in records if r.get("type") == "run_header"), None)
    if header is None:
        raise DataError("event log has no run_header record")
    scoring = header["scoring"]
    detections = tuple(
        Detection(r["gesture"], r["t_us"], r["score"])
        for r in records
        if r.get("type") == "detection"
    )
    pin_events = [r for r in records if r.get("type") == "pin_contact"]
    goal = next((r for r in records if r.get("type") == "goal"), None)
    start = next((r for r in records if r.get("type") == "travel_start"), None)
    command_count = sum(1 for r in records if r.get("type") == "command")
    travel = (
        goal["t_s"] - start["t_s"] if goal is not None and start is not None else 0.0
    )
    total = travel + 5.0 * len(pin_events) if scoring == "slalom" else travel
    return RunReport(
        scenario=header["scenario"],
        travel_s=travel,
        pins_touched=len(pin_events),
        total_s=total,
        goal_reached=goal is not None,
        command_count=command_count,
        detections=detections,
    )


def load_event_log(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"event log line {line_no}: {exc}") from exc
    return records


@dataclass(frozen=True, slots=True)
class ReplayResult:
    trace: str
    sample_count: int
    command_count: int
    detections: tuple[Detection, ...]

    def to_json(self) -> str:
        doc = {
            "trace": self.trace,
            "sample_count": self.sample_count,
            "command_count": self.command_count,
            "detections": [
                {"gesture": d.gesture, "t_us": d.t_us, "score": round(d.score, 9)}
                for d in self.detections
            ],
        }
        return json.dumps(doc, sort_keys=True)


def replay(
    trace_path: str | Path,
    templates: list[GestureTemplate] | None = None,
    config: ControlConfig | None = None,
) -> ReplayResult:
    """Run a recorded trace through the pipeline and report what fired."""
    templates = templates if templates is not None else canonical_templates()
    proc = Processor(templates, config if config is not None else ControlConfig())
    detections: list[Detection] = []
    commands = 0
    samples = read_trace(trace_path)
    for sample in samples:
        out = proc.ingest(sample)
        if out.decision is not None and out.decision.gesture is not None:
            detections.append(
                Detection(out.decision.gesture.label, out.decision.t_us, out.decision.score)
            )
        if out.command is not None:
            commands += 1
    return ReplayResult(
        trace=Path(trace_path).name,
        sample_count=len(samples),
        command_count=commands,
        detections=tuple(detections),
    )


def train(
    trace_path: str | Path,
    sidecar_path: str | Path,
    out_path: str | Path,
    rate_hz: float = DEFAULT_TICK_HZ,
) -> list[GestureTemplate]:
    """Cut labeled epochs from a trace and write the averaged templates."""
    samples = read_trace(trace_path)
    intervals = read_sidecar(sidecar_path)
    if not intervals:
        raise DataError("sidecar lists no epochs")
    grouped = extract_epochs(samples, intervals, rate_hz)
    templates = [
        build_template(gesture, epochs)
        for gesture, epochs in sorted(grouped.items(), key=lambda kv: int(kv[0]))
    ]
    save_templates(out_path, templates)
    return templates
