"""Waypoint pilot and the sample-to-command pipeline."""

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wristdrive.autopilot import (
    DEFAULT_ROUTES,
    Autopilot,
    AutopilotConfig,
    pilot_for,
    wrap_to_pi,
)
from wristdrive.config import ControlConfig
from wristdrive.controller import (
    ModeChanged,
    OperationalMode,
    VibrationAck,
    map_pose_to_velocity,
)
from wristdrive.gesture import (
    GestureClass,
    canonical_templates,
    epoch_to_samples,
    synthesize_gesture,
)
from wristdrive.imu import HALF_PI, ImuSample
from wristdrive.pipeline import Processor
from wristdrive.scenarios import load_scenario
from wristdrive.sim import GoalLine, Rect, RobotPose, World

GRAVITY = 9.81


def _pilot(points, **kw):
    return Autopilot(AutopilotConfig(waypoints=tuple(points), **kw))


class TestWrapToPi:
    def test_identity_inside_range(self):
        assert wrap_to_pi(0.0) == 0.0
        assert wrap_to_pi(1.0) == pytest.approx(1.0)
        assert wrap_to_pi(-3.0) == pytest.approx(-3.0)

    def test_wraps_known_angles(self):
        assert wrap_to_pi(math.pi) == pytest.approx(-math.pi)
        assert wrap_to_pi(3.0 * math.pi / 2.0) == pytest.approx(-math.pi / 2.0)
        assert wrap_to_pi(-3.0 * math.pi / 2.0) == pytest.approx(math.pi / 2.0)

    @given(st.floats(-50.0, 50.0))
    def test_range_and_congruence(self, angle):
        out = wrap_to_pi(angle)
        assert -math.pi <= out < math.pi
        k = (angle - out) / (2.0 * math.pi)
        assert abs(k - round(k)) < 1e-9


class TestAutopilotConfig:
    def test_rejects_empty_route(self):
        with pytest.raises(ValueError):
            AutopilotConfig(waypoints=())

    def test_rejects_nonpositive_lookahead(self):
        with pytest.raises(ValueError):
            AutopilotConfig(waypoints=((1.0, 1.0),), lookahead_m=0.0)

    def test_rejects_nonpositive_capture_radius(self):
        with pytest.raises(ValueError):
            AutopilotConfig(waypoints=((1.0, 1.0),), capture_radius_m=-0.1)

    def test_rejects_cruise_above_limit(self):
        with pytest.raises(ValueError):
            AutopilotConfig(waypoints=((1.0, 1.0),), v_max=0.5, cruise_speed=0.6)

    def test_rejects_nonpositive_cruise(self):
        with pytest.raises(ValueError):
            AutopilotConfig(waypoints=((1.0, 1.0),), cruise_speed=0.0)

    def test_cruise_at_limit_allowed(self):
        cfg = AutopilotConfig(waypoints=((1.0, 1.0),), v_max=0.5, cruise_speed=0.5)
        assert cfg.cruise_speed == 0.5


class TestAutopilotStepping:
    def test_straight_ahead_drives_forward_without_turning(self):
        pilot = _pilot([(5.0, 0.0)])
        est = pilot.step(RobotPose(0.0, 0.0, 0.0), 1000)
        assert est.roll == pytest.approx(HALF_PI)  # full speed at zero error
        assert est.pitch == pytest.approx(0.0)
        assert est.t_us == 1000

    def test_waypoint_to_the_left_turns_left(self):
        pilot = _pilot([(0.0, 5.0)])
        est = pilot.step(RobotPose(0.0, 0.0, 0.0), 0)
        assert est.pitch > 0.0

    def test_waypoint_to_the_right_turns_right(self):
        pilot = _pilot([(0.0, -5.0)])
        est = pilot.step(RobotPose(0.0, 0.0, 0.0), 0)
        assert est.pitch < 0.0

    def test_waypoint_behind_stops_forward_motion(self):
        # cos(error) <= 0: rotate in place rather than drive away
        pilot = _pilot([(-5.0, 0.0)])
        est = pilot.step(RobotPose(0.0, 0.0, 0.0), 0)
        assert est.roll == pytest.approx(0.0)

    def test_capture_advances_to_next_waypoint(self):
        pilot = _pilot([(1.0, 0.0), (10.0, 0.0)], capture_radius_m=0.5)
        pilot.step(RobotPose(0.8, 0.0, 0.0), 0)
        assert pilot.next_index == 1
        assert not pilot.done

    def test_route_exhaustion_yields_rest_angles(self):
        pilot = _pilot([(1.0, 0.0)], capture_radius_m=0.5)
        est = pilot.step(RobotPose(1.1, 0.0, 0.0), 77)
        assert pilot.done
        assert est.roll == 0.0 and est.pitch == 0.0
        assert est.t_us == 77

    def test_final_approach_slows_down(self):
        pilot = _pilot([(0.3, 0.0)], lookahead_m=0.6, capture_radius_m=0.1)
        near = pilot.step(RobotPose(0.0, 0.0, 0.0), 0)
        far = _pilot([(5.0, 0.0)]).step(RobotPose(0.0, 0.0, 0.0), 0)
        assert near.roll < far.roll

    def test_cruise_speed_caps_commanded_velocity(self):
        pilot = _pilot([(5.0, 0.0)], v_max=0.7, cruise_speed=0.45)
        est = pilot.step(RobotPose(0.0, 0.0, 0.0), 0)
        cmd = map_pose_to_velocity(
            est.roll, est.pitch, 0, ControlConfig().gains(), OperationalMode.TELEOPERATED
        )
        assert cmd.v == pytest.approx(0.45)

    @given(
        st.floats(-3.0, 3.0),
        st.floats(-3.0, 3.0),
        st.floats(0.0, 2.0 * math.pi),
    )
    @settings(max_examples=200)
    def test_angles_stay_inside_wrist_range(self, tx, ty, theta):
        pilot = _pilot([(tx, ty)])
        est = pilot.step(RobotPose(0.0, 0.0, theta), 0)
        assert -HALF_PI <= est.roll <= HALF_PI
        assert -HALF_PI <= est.pitch <= HALF_PI

    @given(
        st.floats(-3.0, 3.0),
        st.floats(-3.0, 3.0),
        st.floats(0.0, 2.0 * math.pi),
    )
    @settings(max_examples=200)
    def test_mapping_recovers_pilot_intent(self, tx, ty, theta):
        """The emitted angles, pushed through the wrist mapping, reproduce
        the pilot's desired speeds. This is the property that makes the
        pilot a faithful stand-in for an operator."""
        cfg = AutopilotConfig(waypoints=((tx, ty),), v_max=0.7, omega_max=1.0)
        pilot = Autopilot(cfg)
        pose = RobotPose(0.0, 0.0, theta)
        est = pilot.step(pose, 0)

        dx, dy = tx - pose.x, ty - pose.y
        err = wrap_to_pi(math.atan2(dy, dx) - pose.theta)
        if math.hypot(dx, dy) <= cfg.capture_radius_m:
            return  # captured: rest output, nothing to invert
        omega_des = max(-1.0, min(1.0, cfg.angular_gain * err))
        v_des = 0.7 * max(0.0, math.cos(err))
        if math.hypot(dx, dy) < cfg.lookahead_m:
            v_des *= math.hypot(dx, dy) / cfg.lookahead_m

        cmd = map_pose_to_velocity(
            est.roll, est.pitch, 0, ControlConfig().gains(), OperationalMode.TELEOPERATED
        )
        assert cmd.v == pytest.approx(v_des, abs=1e-9)
        assert cmd.omega == pytest.approx(omega_des, abs=1e-9)


class TestRouteFixtures:
    def test_all_builtin_scenarios_have_routes(self):
        assert set(DEFAULT_ROUTES) == {"slalom", "targets", "building"}

    def test_slalom_route_alternates_sides(self):
        xs = [x for x, y in DEFAULT_ROUTES["slalom"] if abs(x - 1.65) > 0.85]
        sides = [1 if x > 1.65 else -1 for x in xs]
        assert len(sides) == 7
        assert all(a != b for a, b in zip(sides, sides[1:]))

    def test_slalom_route_stays_inside_arena(self):
        for x, y in DEFAULT_ROUTES["slalom"]:
            assert 0.0 < x < 3.3
            assert 0.0 < y < 9.0

    def test_targets_route_visits_every_pin(self):
        world = load_scenario("targets")
        pins = {(p.x, p.y) for p in world.pins}
        hits = set()
        for wx, wy in DEFAULT_ROUTES["targets"]:
            for px, py in pins:
                if math.hypot(wx - px, wy - py) < 1e-9:
                    hits.add((px, py))
        assert hits == pins

    def test_pilot_for_builtin_uses_fixture_route(self):
        world = load_scenario("slalom")
        pilot = pilot_for(world, 0.7, 1.0)
        assert pilot.config.waypoints == DEFAULT_ROUTES["slalom"]
        assert pilot.config.cruise_speed == pytest.approx(0.45)

    def test_pilot_for_drops_cruise_when_limit_is_lower(self):
        world = load_scenario("slalom")
        pilot = pilot_for(world, 0.3, 1.0)
        assert pilot.config.cruise_speed is None
        assert pilot.config.v_max == 0.3

    def test_pilot_for_unknown_world_routes_to_goal_line(self):
        world = World(
            name="corridor",
            pose=RobotPose(0.5, 0.5, 0.0),
            bounds=Rect(0.0, 4.0, 0.0, 1.0),
            goal=GoalLine(axis="x", value=3.5, side="above"),
            scoring="plain",
        )
        pilot = pilot_for(world, 0.7, 1.0)
        (wx, wy), = pilot.config.waypoints
        assert wx > 3.5
        assert wy == pytest.approx(0.5)


def _rest(t_us, az=GRAVITY):
    return ImuSample(t_us=t_us, accel=(0.0, 0.0, az), gyro=(0.0, 0.0, 0.0))


class TestProcessor:
    def test_first_sample_seeds_estimate_from_gravity(self):
        proc = Processor(canonical_templates())
        out = proc.ingest(
            ImuSample(t_us=0, accel=(0.0, GRAVITY / math.sqrt(2.0), GRAVITY / math.sqrt(2.0)), gyro=(0.0, 0.0, 0.0))
        )
        assert out.estimate.roll == pytest.approx(math.pi / 4.0)
        assert out.estimate.pitch == pytest.approx(0.0)

    def test_zero_accel_first_sample_defaults_to_level(self):
        proc = Processor(canonical_templates())
        out = proc.ingest(ImuSample(t_us=0, accel=(0.0, 0.0, 0.0), gyro=(0.0, 0.0, 0.0)))
        assert out.estimate.roll == 0.0
        assert out.estimate.pitch == 0.0

    def test_stale_sample_is_counted_and_changes_nothing(self):
        proc = Processor(canonical_templates())
        proc.ingest(_rest(100_000))
        before = (proc.samples_seen, proc.estimate, proc.mode)
        out = proc.ingest(_rest(50_000))
        assert proc.stale_dropped == 1
        assert (proc.samples_seen, proc.estimate, proc.mode) == before
        assert out.decision is None
        assert out.events == ()
        assert out.command is None
        assert out.estimate is before[1]  # echoes the standing estimate

    def test_commands_paced_at_configured_rate(self):
        # 100 Hz samples against a 50 Hz command rate: every other sample
        proc = Processor(canonical_templates(), ControlConfig(command_rate_hz=50.0))
        emitted = []
        for i in range(10):
            out = proc.ingest(_rest(i * 10_000))
            emitted.append(out.command is not None)
        assert emitted == [True, False, True, False, True, False, True, False, True, False]

    def test_commands_rest_while_autonomous(self):
        proc = Processor(canonical_templates())
        assert proc.mode is OperationalMode.AUTONOMOUS
        out = proc.ingest(
            ImuSample(t_us=0, accel=(0.0, 5.0, 5.0), gyro=(0.0, 0.0, 0.0))
        )
        assert out.command is not None
        assert out.command.v == 0.0 and out.command.omega == 0.0

    def test_circle_stream_toggles_mode_with_ack(self):
        proc = Processor(canonical_templates(rate_hz=50.0))
        circle = synthesize_gesture(GestureClass.CIRCLE, rng_seed=3, noise_sigma=0.05)
        stream = [_rest(i * 20_000) for i in range(25)]
        stream += epoch_to_samples(
            circle, start_t_us=stream[-1].t_us + 20_000, base=(0.0, 0.0, GRAVITY, 0.0, 0.0, 0.0)
        )
        detections = []
        events = []
        for s in stream:
            out = proc.ingest(s)
            if out.decision is not None and out.decision.gesture is not None:
                detections.append(out.decision)
            events.extend(out.events)
        assert [d.gesture for d in detections] == [GestureClass.CIRCLE]
        acks = [e for e in events if isinstance(e, VibrationAck)]
        modes = [e for e in events if isinstance(e, ModeChanged)]
        assert len(acks) == 1 and acks[0].gesture is GestureClass.CIRCLE
        assert len(modes) == 1 and modes[0].mode is OperationalMode.TELEOPERATED
        assert proc.mode is OperationalMode.TELEOPERATED

    def test_second_circle_toggles_back(self):
        proc = Processor(canonical_templates(rate_hz=50.0))
        stream = [_rest(i * 20_000) for i in range(25)]
        for seed in (3, 4):
            circle = synthesize_gesture(GestureClass.CIRCLE, rng_seed=seed, noise_sigma=0.05)
            stream += epoch_to_samples(
                circle,
                start_t_us=stream[-1].t_us + 20_000,
                base=(0.0, 0.0, GRAVITY, 0.0, 0.0, 0.0),
            )
            stream += [
                _rest(stream[-1].t_us + 20_000 * (i + 1)) for i in range(10)
            ]
        fired = 0
        for s in stream:
            out = proc.ingest(s)
            if out.decision is not None and out.decision.gesture is not None:
                fired += 1
        assert fired == 2
        assert proc.mode is OperationalMode.AUTONOMOUS

    def test_refractory_swallows_immediate_repeat(self):
        cfg = ControlConfig(refractory_s=30.0)
        proc = Processor(canonical_templates(rate_hz=50.0), cfg)
        stream = [_rest(i * 20_000) for i in range(25)]
        for seed in (3, 4):
            circle = synthesize_gesture(GestureClass.CIRCLE, rng_seed=seed, noise_sigma=0.05)
            stream += epoch_to_samples(
                circle,
                start_t_us=stream[-1].t_us + 20_000,
                base=(0.0, 0.0, GRAVITY, 0.0, 0.0, 0.0),
            )
        fired = 0
        for s in stream:
            out = proc.ingest(s)
            if out.decision is not None and out.decision.gesture is not None:
                fired += 1
        assert fired == 1
        assert proc.mode is OperationalMode.TELEOPERATED

    def test_teleoperated_commands_track_wrist_angle(self):
        # alpha 0 makes the filter follow the accelerometer exactly, so the
        # expected command is known in closed form
        proc = Processor(canonical_templates(), alpha=0.0)
        proc.state = replace(proc.state, mode=OperationalMode.TELEOPERATED)
        proc.ingest(_rest(0))
        out = proc.ingest(
            ImuSample(
                t_us=20_000,
                accel=(0.0, GRAVITY / math.sqrt(2.0), GRAVITY / math.sqrt(2.0)),
                gyro=(0.0, 0.0, 0.0),
            )
        )
        assert out.command is not None
        expected_v = 0.7 * (math.pi / 4.0) / HALF_PI
        assert out.command.v == pytest.approx(expected_v)
        assert out.command.omega == pytest.approx(0.0)

    def test_no_matching_before_window_fills(self):
        proc = Processor(canonical_templates(rate_hz=50.0))
        shortest = min(len(t) for t in proc.templates)
        for i in range(shortest - 1):
            out = proc.ingest(_rest(i * 20_000))
            assert out.decision is None
        out = proc.ingest(_rest((shortest - 1) * 20_000))
        assert out.decision is not None  # scored, even if nothing fires
        assert out.decision.gesture is None
