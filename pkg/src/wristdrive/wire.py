"""Binary framing and message codec for the operator/processor/robot links.

Frame layout, all multi-byte fields little-endian:

    magic 0x57 0x50 | version 0x01 | kind u8 | payload length u32 |
    payload | CRC-32 (IEEE) over kind + length + payload

The decoder accepts arbitrary byte streams: it scans forward to the magic
pair, reports truncated frames as incomplete (so stream readers wait for
more bytes) and CRC failures as corrupt (frame skipped, scan resumes inside
the bad frame so an embedded good frame is still found).
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass
from enum import Enum, IntEnum

from .errors import ProtocolError

MAGIC = b"\x57\x50"
VERSION = 0x01
HEADER_LEN = 8  # magic + version + kind + u32 length
CRC_LEN = 4
MAX_PAYLOAD = 1 << 20

KIND_IMU = 0x01
KIND_VELOCITY = 0x02
KIND_GESTURE_ACK = 0x03
KIND_MODE = 0x04
KIND_TELEMETRY = 0x05
KIND_HELLO = 0x06

_IMU_STRUCT = struct.Struct("<Q9f")
_VELOCITY_STRUCT = struct.Struct("<Q2f")

MODE_AUTONOMOUS = 0
MODE_TELEOPERATED = 1

ROLE_OPERATOR = 0
ROLE_ROBOT = 1
ROLE_VIEWER = 2


class EncodeError(ProtocolError):
    pass


@dataclass(frozen=True, slots=True)
class ImuSampleMsg:
    t_us: int
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    mag: tuple[float, float, float] | None = None


@dataclass(frozen=True, slots=True)
class VelocityCmdMsg:
    t_us: int
    v: float
    omega: float


@dataclass(frozen=True, slots=True)
class GestureAckMsg:
    gesture_id: int


@dataclass(frozen=True, slots=True)
class ModeMsg:
    mode: int  # MODE_AUTONOMOUS or MODE_TELEOPERATED


@dataclass(frozen=True, slots=True)
class TelemetryMsg:
    """Opaque structured-text snapshot; kept as bytes so frames round-trip
    byte-exactly."""

    data: bytes

    @classmethod
    def from_obj(cls, obj: dict) -> "TelemetryMsg":
        return cls(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode())

    def to_obj(self) -> dict:
        return json.loads(self.data.decode("utf-8"))


@dataclass(frozen=True, slots=True)
class HelloMsg:
    role: int  # ROLE_OPERATOR / ROLE_ROBOT / ROLE_VIEWER


Message = ImuSampleMsg | VelocityCmdMsg | GestureAckMsg | ModeMsg | TelemetryMsg | HelloMsg

_NAN_TRIPLE = (math.nan, math.nan, math.nan)


def _payload_for(msg: Message) -> tuple[int, bytes]:
    if isinstance(msg, ImuSampleMsg):
        if msg.t_us < 0:
            raise EncodeError("timestamp must be non-negative")
        mag = msg.mag if msg.mag is not None else _NAN_TRIPLE
        return KIND_IMU, _IMU_STRUCT.pack(msg.t_us, *msg.accel, *msg.gyro, *mag)
    if isinstance(msg, VelocityCmdMsg):
        if msg.t_us < 0:
            raise EncodeError("timestamp must be non-negative")
        return KIND_VELOCITY, _VELOCITY_STRUCT.pack(msg.t_us, msg.v, msg.omega)
    if isinstance(msg, GestureAckMsg):
        if not 1 <= msg.gesture_id <= 5:
            raise EncodeError(f"gesture id {msg.gesture_id} outside 1-5")
        return KIND_GESTURE_ACK, bytes([msg.gesture_id])
    if isinstance(msg, ModeMsg):
        if msg.mode not in (MODE_AUTONOMOUS, MODE_TELEOPERATED):
            raise EncodeError(f"mode byte {msg.mode} outside 0-1")
        return KIND_MODE, bytes([msg.mode])
    if isinstance(msg, TelemetryMsg):
        if len(msg.data) > MAX_PAYLOAD:
            raise EncodeError("telemetry snapshot too large")
        return KIND_TELEMETRY, msg.data
    if isinstance(msg, HelloMsg):
        if msg.role not in (ROLE_OPERATOR, ROLE_ROBOT, ROLE_VIEWER):
            raise EncodeError(f"role byte {msg.role} outside 0-2")
        return KIND_HELLO, bytes([msg.role])
    raise EncodeError(f"unknown message type {type(msg).__name__}")


def encode(msg: Message) -> bytes:
    kind, payload = _payload_for(msg)
    body = bytes([kind]) + struct.pack("<I", len(payload)) + payload
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return MAGIC + bytes([VERSION]) + body + struct.pack("<I", crc)


def _f32_triple(values: tuple[float, float, float]) -> tuple[float, float, float] | None:
    if all(math.isnan(v) for v in values):
        return None
    return values


def _parse_payload(kind: int, payload: bytes) -> Message:
    if kind == KIND_IMU:
        if len(payload) != _IMU_STRUCT.size:
            raise ValueError("bad length")
        t_us, *f = _IMU_STRUCT.unpack(payload)
        return ImuSampleMsg(
            t_us=t_us,
            accel=(f[0], f[1], f[2]),
            gyro=(f[3], f[4], f[5]),
            mag=_f32_triple((f[6], f[7], f[8])),
        )
    if kind == KIND_VELOCITY:
        if len(payload) != _VELOCITY_STRUCT.size:
            raise ValueError("bad length")
        t_us, v, omega = _VELOCITY_STRUCT.unpack(payload)
        return VelocityCmdMsg(t_us=t_us, v=v, omega=omega)
    if kind == KIND_GESTURE_ACK:
        if len(payload) != 1 or not 1 <= payload[0] <= 5:
            raise ValueError("bad gesture ack")
        return GestureAckMsg(gesture_id=payload[0])
    if kind == KIND_MODE:
        if len(payload) != 1 or payload[0] not in (0, 1):
            raise ValueError("bad mode byte")
        return ModeMsg(mode=payload[0])
    if kind == KIND_TELEMETRY:
        return TelemetryMsg(data=payload)
    if kind == KIND_HELLO:
        if len(payload) != 1 or payload[0] not in (0, 1, 2):
            raise ValueError("bad role byte")
        return HelloMsg(role=payload[0])
    raise ValueError(f"kind {kind}")


class DecodeStatus(Enum):
    OK = "ok"
    INCOMPLETE = "incomplete"
    CORRUPT = "corrupt"
    UNSUPPORTED_KIND = "unsupported_kind"
    BAD_VERSION = "bad_version"


@dataclass(frozen=True, slots=True)
class DecodeResult:
    status: DecodeStatus
    consumed: int
    message: Message | None = None
    kind: int | None = None


def decode(buf: bytes | bytearray | memoryview) -> DecodeResult:
    """Try to lift one frame off the front of buf.

    consumed says how many leading bytes the caller must drop regardless of
    status; INCOMPLETE means the remainder may become decodable once more
    bytes arrive.
    """
    buf = bytes(buf)
    start = buf.find(MAGIC)
    if start < 0:
        # keep a trailing 0x57 in case its 0x50 is still in flight
        keep = 1 if buf.endswith(MAGIC[:1]) else 0
        return DecodeResult(DecodeStatus.INCOMPLETE, max(0, len(buf) - keep))
    if len(buf) - start < HEADER_LEN:
        return DecodeResult(DecodeStatus.INCOMPLETE, start)

    version = buf[start + 2]
    kind = buf[start + 3]
    (length,) = struct.unpack_from("<I", buf, start + 4)
    if version != VERSION:
        return DecodeResult(DecodeStatus.BAD_VERSION, start + 2)
    if length > MAX_PAYLOAD:
        return DecodeResult(DecodeStatus.CORRUPT, start + 2)
    frame_end = start + HEADER_LEN + length + CRC_LEN
    if len(buf) < frame_end:
        return DecodeResult(DecodeStatus.INCOMPLETE, start)

    body = buf[start + 3 : start + HEADER_LEN + length]
    (crc_stored,) = struct.unpack_from("<I", buf, frame_end - CRC_LEN)
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        return DecodeResult(DecodeStatus.CORRUPT, start + 2)

    payload = buf[start + HEADER_LEN : start + HEADER_LEN + length]
    try:
        msg = _parse_payload(kind, payload)
    except ValueError:
        if kind in (
            KIND_IMU,
            KIND_VELOCITY,
            KIND_GESTURE_ACK,
            KIND_MODE,
            KIND_TELEMETRY,
            KIND_HELLO,
        ):
            # well-framed but malformed payload for a known kind
            return DecodeResult(DecodeStatus.CORRUPT, frame_end, kind=kind)
        return DecodeResult(DecodeStatus.UNSUPPORTED_KIND, frame_end, kind=kind)
    return DecodeResult(DecodeStatus.OK, frame_end, message=msg, kind=kind)


class FrameDecoder:
    """Stateful stream decoder: feed bytes, collect messages.

    Tracks how many frames were skipped as corrupt or unsupported so a
    session can surface link quality.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.corrupt_frames = 0
        self.unsupported_frames = 0
        self.bad_version_frames = 0

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out: list[Message] = []
        while True:
            result = decode(self._buf)
            if result.consumed:
                del self._buf[: result.consumed]
            if result.status is DecodeStatus.OK:
                out.append(result.message)
                continue
            if result.status is DecodeStatus.INCOMPLETE:
                return out
            if result.status is DecodeStatus.CORRUPT:
                self.corrupt_frames += 1
            elif result.status is DecodeStatus.UNSUPPORTED_KIND:
                self.unsupported_frames += 1
            elif result.status is DecodeStatus.BAD_VERSION:
                self.bad_version_frames += 1
            if not result.consumed:
                return out


class Destination(Enum):
    PIPELINE = "pipeline"
    ROBOT = "robot"
    OPERATOR = "operator"
    VIEWERS = "viewers"


class Sender(Enum):
    OPERATOR = "operator"
    ROBOT = "robot"
    VIEWER = "viewer"
    PIPELINE = "pipeline"


_ROUTES: dict[tuple[Sender, type], tuple[Destination, ...]] = {
    (Sender.OPERATOR, ImuSampleMsg): (Destination.PIPELINE,),
    (Sender.PIPELINE, VelocityCmdMsg): (Destination.ROBOT,),
    (Sender.PIPELINE, GestureAckMsg): (Destination.OPERATOR,),
    (Sender.PIPELINE, ModeMsg): (Destination.OPERATOR, Destination.VIEWERS),
    (Sender.ROBOT, TelemetryMsg): (Destination.OPERATOR, Destination.VIEWERS),
}


def route(sender: Sender, msg: Message) -> tuple[Destination, ...]:
    """Forwarding decision for one message; raises on role violations."""
    if isinstance(msg, HelloMsg):
        raise ProtocolError("hello after session setup")
    key = (sender, type(msg))
    if key not in _ROUTES:
        raise ProtocolError(
            f"{sender.value} may not send {type(msg).__name__}"
        )
    return _ROUTES[key]


def sender_for_role(role: int) -> Sender:
    if role == ROLE_OPERATOR:
        return Sender.OPERATOR
    if role == ROLE_ROBOT:
        return Sender.ROBOT
    if role == ROLE_VIEWER:
        return Sender.VIEWER
    raise ProtocolError(f"unknown role byte {role}")
