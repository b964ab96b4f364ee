"""Live service: operator sessions in, simulated robot out.

Three stages run as threads connected by bounded queues: ingest/recognition
(filter, window, matcher), controller (mode machine and the angle-to-velocity
mapping), and the simulator (fixed-rate world stepping). Session handlers sit
at the edges: a binary TCP port speaks raw frames, and an HTTP port serves
the console assets plus a WebSocket bridge at /ws carrying one encoded frame
per message (text messages hold the frame base64-encoded, binary messages
hold it raw). Commands reach the robot through a latest-wins slot, never a
queue. An optional one-way link delay can be injected on both directions.

Roles follow the routing table: exactly one operator may drive; viewers watch
telemetry; an external robot-role session receives velocity commands and may
publish its own telemetry. A routing violation drops the offending session.
"""

from __future__ import annotations

import base64
import hashlib
import itertools
import json
import os
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .config import ControlConfig
from .controller import (
    ControllerState,
    ModeChanged,
    OperationalMode,
    VelocityCommand,
    VibrationAck,
    initial_state,
    map_pose_to_velocity,
    step_mode,
)
from .errors import ProtocolError, UsageError
from .gesture import GestureTemplate, canonical_templates, match_window
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
from .scenarios import load_scenario, scenario_geometry
from .sim import PinContact, WallContact, GoalReached, World, step_world
from .wire import (
    FrameDecoder,
    GestureAckMsg,
    HelloMsg,
    ImuSampleMsg,
    ModeMsg,
    Sender,
    TelemetryMsg,
    VelocityCmdMsg,
    encode,
    route,
    sender_for_role,
    Destination,
)

SAMPLE_QUEUE_DEPTH = 256
DECISION_QUEUE_DEPTH = 256
OUTBOX_DEPTH = 256
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_RESET = object()  # pipeline state flush, enqueued when a new operator takes over


class _DelayLine:
    """Bounded FIFO whose items become visible `delay_s` after they were put.

    With a constant delay the order is preserved, so this models a fixed
    one-way link latency. Overflow drops the oldest item.
    """

    def __init__(self, depth: int, delay_s: float = 0.0):
        self._q: queue.Queue = queue.Queue(maxsize=depth)
        self._delay = delay_s
        self.dropped = 0

    def put(self, item) -> None:
        entry = (time.monotonic() + self._delay, item)
        while True:
            try:
                self._q.put_nowait(entry)
                return
            except queue.Full:
                try:
                    self._q.get_nowait()
                    self.dropped += 1
                except queue.Empty:
                    pass

    def get(self, timeout: float):
        """Returns the next item or raises queue.Empty after `timeout`.

        A claimed item is always delivered, even when honoring its delivery
        time pushes past the nominal timeout.
        """
        deliver_at, item = self._q.get(timeout=timeout)
        wait = deliver_at - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        return item


class CommandSlot:
    """Latest-wins velocity command hand-off to the simulator."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._cmd: VelocityCommand | None = None

    def set(self, cmd: VelocityCommand) -> None:
        with self._lock:
            self._cmd = cmd

    def latest(self) -> VelocityCommand | None:
        with self._lock:
            return self._cmd

    def clear(self) -> None:
        with self._lock:
            self._cmd = None


class Session:
    """One connected peer: a role, a transport, and a paced outbox."""

    _ids = itertools.count(1)

    def __init__(self, role: Sender, transport, latency_s: float):
        self.id = next(Session._ids)
        self.role = role
        self.transport = transport
        self.outbox = _DelayLine(OUTBOX_DEPTH, latency_s)
        self.alive = True

    def send(self, frame: bytes) -> None:
        if self.alive:
            self.outbox.put(frame)

    def close(self) -> None:
        self.alive = False
        try:
            self.transport.close()
        except OSError:
            pass


class SessionTable:
    """Role-indexed registry; enforces the single-operator rule."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.operator: Session | None = None
        self.robots: list[Session] = []
        self.viewers: list[Session] = []

    def register(self, sess: Session) -> None:
        with self._lock:
            if sess.role is Sender.OPERATOR:
                if self.operator is not None and self.operator.alive:
                    raise ProtocolError("an operator is already connected")
                self.operator = sess
            elif sess.role is Sender.ROBOT:
                self.robots.append(sess)
            else:
                self.viewers.append(sess)

    def unregister(self, sess: Session) -> bool:
        """Returns True when the departing session was the operator."""
        with self._lock:
            if self.operator is sess:
                self.operator = None
                return True
            if sess in self.robots:
                self.robots.remove(sess)
            if sess in self.viewers:
                self.viewers.remove(sess)
            return False

    def all(self) -> list[Session]:
        with self._lock:
            out = list(self.robots) + list(self.viewers)
            if self.operator is not None:
                out.append(self.operator)
            return out

    def dispatch(self, dest: Destination, frame: bytes) -> None:
        with self._lock:
            if dest is Destination.OPERATOR:
                targets = [self.operator] if self.operator else []
            elif dest is Destination.VIEWERS:
                targets = list(self.viewers)
            elif dest is Destination.ROBOT:
                targets = list(self.robots)
            else:
                targets = []
        for t in targets:
            t.send(frame)


@dataclass
class _Shared:
    """Cross-stage mutable state, lock-protected."""

    lock: threading.Lock
    mode: OperationalMode
    last_cmd: VelocityCommand | None = None


class Server:
    """Owns the stages, the listeners, and their threads."""

    def __init__(
        self,
        scenario: str = "slalom",
        config: ControlConfig | None = None,
        templates: list[GestureTemplate] | None = None,
        tick_hz: float = 50.0,
        port: int = 0,
        http_port: int | None = None,
        latency_ms: float = 0.0,
        speed: float = 1.0,
        assets_dir: str | Path | None = None,
    ):
        if tick_hz <= 0.0:
            raise ValueError("tick_hz must be positive")
        if speed <= 0.0:
            raise ValueError("speed must be positive")
        if latency_ms < 0.0:
            raise ValueError("latency must be nonnegative")
        self.config = config if config is not None else ControlConfig()
        self.templates = templates if templates is not None else canonical_templates()
        self.world: World = load_scenario(scenario)
        self.scene_doc = scenario_geometry(self.world)
        self.tick_hz = tick_hz
        self.speed = speed
        self.latency_s = latency_ms / 1000.0
        self._want_port = port
        self._want_http_port = http_port
        self.assets_dir = Path(assets_dir) if assets_dir is not None else None

        self.sessions = SessionTable()
        self.slot = CommandSlot()
        self.q_samples = _DelayLine(SAMPLE_QUEUE_DEPTH, self.latency_s)
        self.q_decisions: queue.Queue = queue.Queue(maxsize=DECISION_QUEUE_DEPTH)
        self.shared = _Shared(threading.Lock(), OperationalMode.AUTONOMOUS)
        self.stale_dropped = 0
        self.port: int | None = None
        self.http_port: int | None = None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._tcp_listener: socket.socket | None = None
        self._httpd: ThreadingHTTPServer | None = None

    # ---- lifecycle ----

    def start(self) -> None:
        self._tcp_listener = socket.create_server(
            ("127.0.0.1", self._want_port), reuse_port=False
        )
        self.port = self._tcp_listener.getsockname()[1]
        want_http = (
            self._want_http_port
            if self._want_http_port is not None
            else (self.port + 1 if self._want_port else 0)
        )
        self._httpd = ThreadingHTTPServer(
            ("127.0.0.1", want_http), self._make_http_handler()
        )
        self._httpd.daemon_threads = True
        self.http_port = self._httpd.server_address[1]

        for target in (
            self._ingest_stage,
            self._control_stage,
            self._sim_stage,
            self._accept_loop,
        ):
            t = threading.Thread(target=target, daemon=True)
            t.start()
            self._threads.append(t)
        t = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        t.start()
        self._threads.append(t)

    def stop(self) -> None:
        self._stop.set()
        if self._tcp_listener is not None:
            try:
                self._tcp_listener.close()
            except OSError:
                pass
        for sess in self.sessions.all():
            sess.close()  # unblocks reader threads stuck in recv
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        for t in self._threads:
            t.join(timeout=2.0)

    # ---- stage 1: ingest / recognition ----

    def _ingest_stage(self) -> None:
        estimate: OrientationEstimate | None = None
        window = SignalWindow(capacity=max((len(t) for t in self.templates), default=2))
        min_len = min((len(t) for t in self.templates), default=2)
        last_fire_us: int | None = None

        while not self._stop.is_set():
            try:
                msg = self.q_samples.get(timeout=0.1)
            except queue.Empty:
                continue
            if msg is _RESET:
                estimate = None
                window = SignalWindow(capacity=window.capacity)
                last_fire_us = None
                self._put_decision(_RESET)
                continue
            sample = ImuSample(
                t_us=msg.t_us, accel=msg.accel, gyro=msg.gyro, mag=msg.mag
            )
            try:
                window.push(sample)
            except StaleSampleError:
                self.stale_dropped += 1
                continue
            if estimate is None:
                try:
                    roll, pitch = accel_to_roll_pitch(sample)
                except IndeterminateOrientationError:
                    roll, pitch = 0.0, 0.0
                estimate = OrientationEstimate(roll, pitch, sample.t_us)
            else:
                dt = (sample.t_us - estimate.t_us) / 1e6
                estimate = update_orientation(
                    estimate, sample, dt, DEFAULT_FILTER_ALPHA
                )
            decision = None
            if len(window) >= min_len and self.templates:
                decision = match_window(
                    window,
                    self.templates,
                    threshold=self.config.gesture_threshold,
                    refractory_s=self.config.refractory_s,
                    last_fire_us=last_fire_us,
                )
                if decision.gesture is not None:
                    last_fire_us = decision.t_us
            self._put_decision((estimate, decision))

    def _put_decision(self, item) -> None:
        while not self._stop.is_set():
            try:
                self.q_decisions.put(item, timeout=0.1)
                return
            except queue.Full:
                try:
                    self.q_decisions.get_nowait()
                except queue.Empty:
                    pass

    # ---- stage 2: controller ----

    def _control_stage(self) -> None:
        state: ControllerState = initial_state(self.config.gains())
        period_us = int(round(1e6 / self.config.command_rate_hz))
        last_cmd_us: int | None = None

        while not self._stop.is_set():
            try:
                item = self.q_decisions.get(timeout=0.1)
            except queue.Empty:
                continue
            if item is _RESET:
                last_cmd_us = None
                continue
            estimate, decision = item
            if decision is not None and decision.gesture is not None:
                state, events = step_mode(state, decision)
                with self.shared.lock:
                    self.shared.mode = state.mode
                for ev in events:
                    if isinstance(ev, VibrationAck):
                        msg = GestureAckMsg(gesture_id=int(ev.gesture))
                        frame = encode(msg)
                        for dest in route(Sender.PIPELINE, msg):
                            self.sessions.dispatch(dest, frame)
                    elif isinstance(ev, ModeChanged):
                        msg = ModeMsg(
                            mode=0 if ev.mode is OperationalMode.AUTONOMOUS else 1
                        )
                        frame = encode(msg)
                        for dest in route(Sender.PIPELINE, msg):
                            self.sessions.dispatch(dest, frame)
            if last_cmd_us is None or estimate.t_us - last_cmd_us >= period_us:
                last_cmd_us = estimate.t_us
                cmd = map_pose_to_velocity(
                    estimate.roll, estimate.pitch, estimate.t_us, state.gains, state.mode
                )
                self.slot.set(cmd)
                msg = VelocityCmdMsg(t_us=cmd.t_us, v=cmd.v, omega=cmd.omega)
                frame = encode(msg)
                for dest in route(Sender.PIPELINE, msg):
                    self.sessions.dispatch(dest, frame)

    # ---- stage 3: simulator ----

    def _sim_stage(self) -> None:
        dt = 1.0 / self.tick_hz
        real_period = dt / self.speed
        telemetry_dests = route(Sender.ROBOT, TelemetryMsg(b""))
        next_tick = time.monotonic()
        while not self._stop.is_set():
            next_tick += real_period
            now = time.monotonic()
            if next_tick > now:
                time.sleep(next_tick - now)
            else:
                next_tick = now  # fell behind: don't spiral
            cmd = self.slot.latest()
            t_us = int(self.world.elapsed_s * 1e6)
            applied = cmd if cmd is not None else VelocityCommand(0.0, 0.0, t_us)
            self.world, events = step_world(self.world, applied, dt)
            with self.shared.lock:
                self.shared.last_cmd = applied
                mode = self.shared.mode
            frame = encode(TelemetryMsg.from_obj(self._snapshot(applied, mode, events)))
            for dest in telemetry_dests:
                self.sessions.dispatch(dest, frame)

    def _snapshot(self, cmd: VelocityCommand, mode: OperationalMode, events) -> dict:
        event: dict | None = None
        for ev in events:
            if isinstance(ev, PinContact):
                event = {"kind": "pin_contact", "pin": ev.pin_index, "t_s": ev.t_s}
            elif isinstance(ev, WallContact):
                event = {"kind": "wall_contact", "t_s": ev.t_s}
            elif isinstance(ev, GoalReached):
                event = {"kind": "goal", "t_s": ev.t_s}
        return {
            "type": "state",
            "t_s": round(self.world.elapsed_s, 6),
            "mode": mode.value,
            "pose": {
                "x": round(self.world.pose.x, 6),
                "y": round(self.world.pose.y, 6),
                "theta": round(self.world.pose.theta, 6),
            },
            "v": round(cmd.v, 6),
            "omega": round(cmd.omega, 6),
            "pins": [
                {"x": p.x, "y": p.y, "standing": p.standing} for p in self.world.pins
            ],
            "goal_reached": self.world.goal_reached,
            "event": event,
        }

    # ---- session edges ----

    def _accept_loop(self) -> None:
        assert self._tcp_listener is not None
        while not self._stop.is_set():
            try:
                conn, _ = self._tcp_listener.accept()
            except OSError:
                return  # listener closed
            threading.Thread(
                target=self._run_session,
                args=(_TcpTransport(conn),),
                daemon=True,
            ).start()

    def _run_session(self, transport) -> None:
        """Shared session loop for TCP and WebSocket transports."""
        decoder = FrameDecoder()
        sess: Session | None = None
        sender_thread: threading.Thread | None = None
        try:
            while not self._stop.is_set():
                data = transport.recv()
                if not data:
                    break
                for msg in decoder.feed(data):
                    if sess is None:
                        if not isinstance(msg, HelloMsg):
                            raise ProtocolError("first message must be hello")
                        role = sender_for_role(msg.role)
                        sess = Session(role, transport, self.latency_s)
                        self.sessions.register(sess)
                        sender_thread = threading.Thread(
                            target=self._session_sender, args=(sess,), daemon=True
                        )
                        sender_thread.start()
                        if role is Sender.OPERATOR:
                            self.q_samples.put(_RESET)
                        if role in (Sender.OPERATOR, Sender.VIEWER):
                            scene = dict(self.scene_doc)
                            scene["type"] = "scene"
                            sess.send(encode(TelemetryMsg.from_obj(scene)))
                        continue
                    for dest in route(sess.role, msg):
                        if dest is Destination.PIPELINE:
                            self.q_samples.put(msg)
                        else:
                            self.sessions.dispatch(dest, encode(msg))
        except ProtocolError:
            pass  # violation: drop the connection without ceremony
        except OSError:
            pass
        finally:
            if sess is not None:
                was_operator = self.sessions.unregister(sess)
                if was_operator:
                    self.slot.clear()
                sess.close()
            else:
                try:
                    transport.close()
                except OSError:
                    pass

    def _session_sender(self, sess: Session) -> None:
        while not self._stop.is_set() and sess.alive:
            try:
                frame = sess.outbox.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                sess.transport.send(frame)
            except OSError:
                sess.alive = False
                return

    # ---- HTTP + WebSocket edge ----

    def _make_http_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):  # quiet by default
                pass

            def do_GET(self):
                if self.path == "/ws":
                    self._upgrade_websocket()
                    return
                self._serve_static()

            def _serve_static(self):
                path = self.path.split("?", 1)[0]
                if path in ("", "/"):
                    path = "/index.html"
                body, ctype = server._asset(path.lstrip("/"))
                if body is None:
                    self.send_response(404)
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _upgrade_websocket(self):
                key = self.headers.get("Sec-WebSocket-Key")
                if (
                    self.headers.get("Upgrade", "").lower() != "websocket"
                    or key is None
                ):
                    self.send_response(400)
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                accept = base64.b64encode(
                    hashlib.sha1((key + _WS_GUID).encode()).digest()
                ).decode()
                self.send_response_only(101)
                self.send_header("Upgrade", "websocket")
                self.send_header("Connection", "Upgrade")
                self.send_header("Sec-WebSocket-Accept", accept)
                self.end_headers()
                self.wfile.flush()
                self.close_connection = True
                server._run_session(_WsTransport(self.connection))

        return Handler

    def _asset(self, rel: str) -> tuple[bytes | None, str]:
        ctypes = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".map": "application/json",
            ".json": "application/json",
            ".svg": "image/svg+xml",
        }
        if self.assets_dir is not None:
            base = self.assets_dir.resolve()
            target = (base / rel).resolve()
            if target.is_file() and target.is_relative_to(base):
                return target.read_bytes(), ctypes.get(target.suffix, "application/octet-stream")
        if rel == "index.html":
            return _FALLBACK_PAGE.encode(), ctypes[".html"]
        return None, ""


_FALLBACK_PAGE = """<!doctype html>
<meta charset="utf-8">
<title>wristdrive</title>
<style>body{font:16px/1.5 system-ui;margin:3rem auto;max-width:38rem;color:#333}</style>
<h1>wristdrive service</h1>
<p>The service is up. The operator console assets are not built; connect a
client to the binary port or to <code>/ws</code> on this port.</p>
"""


class _TcpTransport:
    """Raw byte-stream transport: frames travel back to back."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._lock = threading.Lock()

    def recv(self) -> bytes:
        return self._sock.recv(4096)

    def send(self, frame: bytes) -> None:
        with self._lock:
            self._sock.sendall(frame)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class _WsTransport:
    """RFC 6455 transport: one wire frame per message.

    Text messages carry the frame base64-encoded; binary messages carry the
    raw bytes. Outbound frames go as text for lowest-friction browser use.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._lock = threading.Lock()
        self._closed = False

    # -- receiving --

    def _read_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self._sock.recv(n - len(buf))
            if not chunk:
                raise OSError("websocket peer vanished mid-frame")
            buf += chunk
        return buf

    def recv(self) -> bytes:
        """Returns decoded frame bytes from the next data message, or b''."""
        payload = bytearray()
        opcode = None
        while True:
            head = self._sock.recv(2)
            if len(head) < 2:
                return b""
            fin = bool(head[0] & 0x80)
            op = head[0] & 0x0F
            masked = bool(head[1] & 0x80)
            length = head[1] & 0x7F
            if length == 126:
                length = struct.unpack(">H", self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", self._read_exact(8))[0]
            mask = self._read_exact(4) if masked else b"\x00" * 4
            data = self._read_exact(length) if length else b""
            if masked:
                data = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
            if op == 0x8:  # close
                self._send_raw(0x8, b"")
                return b""
            if op == 0x9:  # ping
                self._send_raw(0xA, data)
                continue
            if op == 0xA:  # pong
                continue
            if op in (0x1, 0x2):
                opcode = op
                payload.extend(data)
            elif op == 0x0 and opcode is not None:
                payload.extend(data)
            else:
                return b""
            if fin and opcode is not None:
                if opcode == 0x1:
                    try:
                        return base64.b64decode(bytes(payload), validate=True)
                    except (ValueError, UnicodeDecodeError):
                        return b""
                return bytes(payload)

    # -- sending --

    def _send_raw(self, opcode: int, data: bytes) -> None:
        head = bytearray([0x80 | opcode])
        n = len(data)
        if n < 126:
            head.append(n)
        elif n < 1 << 16:
            head.append(126)
            head += struct.pack(">H", n)
        else:
            head.append(127)
            head += struct.pack(">Q", n)
        with self._lock:
            self._sock.sendall(bytes(head) + data)

    def send(self, frame: bytes) -> None:
        self._send_raw(0x1, base64.b64encode(frame))

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._send_raw(0x8, b"")
        except OSError:
            pass
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def _default_assets_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def resolve_port(flag_value: int | None) -> int:
    """Port precedence: explicit flag, then environment, then the default."""
    from .cli import DEFAULT_PORT, PORT_ENV_VAR

    if flag_value is not None:
        return flag_value
    env = os.environ.get(PORT_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{PORT_ENV_VAR} must be an integer, got {env!r}") from None
    return DEFAULT_PORT


def serve(args) -> int:
    from .cli import _load_config, _load_templates

    port = resolve_port(args.port)
    server = Server(
        scenario=args.scenario,
        config=_load_config(args),
        templates=_load_templates(args),
        tick_hz=args.tick_hz,
        port=port,
        http_port=args.http_port,
        latency_ms=args.latency_ms,
        speed=args.speed,
        assets_dir=_default_assets_dir(),
    )
    server.start()
    print(
        json.dumps(
            {
                "serving": server.world.name,
                "port": server.port,
                "http_port": server.http_port,
                "tick_hz": server.tick_hz,
                "speed": server.speed,
            },
            sort_keys=True,
        ),
        flush=True,
    )
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0
