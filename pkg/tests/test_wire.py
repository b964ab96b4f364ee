"""Frame codec against an independent bit-level CRC oracle, stream resync,
and the role routing table."""

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wristdrive.errors import ProtocolError
from wristdrive.wire import (
    CRC_LEN,
    HEADER_LEN,
    MAGIC,
    MAX_PAYLOAD,
    VERSION,
    DecodeStatus,
    Destination,
    EncodeError,
    FrameDecoder,
    GestureAckMsg,
    HelloMsg,
    ImuSampleMsg,
    ModeMsg,
    Sender,
    TelemetryMsg,
    VelocityCmdMsg,
    decode,
    encode,
    route,
    sender_for_role,
)


def crc32_reference(data: bytes) -> int:
    """Bit-by-bit CRC-32 (IEEE 802.3: reflected, poly 0xEDB88320)."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (0xEDB88320 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


f32_floats = st.floats(
    allow_nan=False, allow_infinity=False, width=32, min_value=-1e6, max_value=1e6
).map(f32)
timestamps = st.integers(min_value=0, max_value=2**63 - 1)


@st.composite
def messages(draw):
    which = draw(st.integers(min_value=0, max_value=5))
    if which == 0:
        mag = draw(st.one_of(st.none(), st.tuples(f32_floats, f32_floats, f32_floats)))
        return ImuSampleMsg(
            t_us=draw(timestamps),
            accel=draw(st.tuples(f32_floats, f32_floats, f32_floats)),
            gyro=draw(st.tuples(f32_floats, f32_floats, f32_floats)),
            mag=mag,
        )
    if which == 1:
        return VelocityCmdMsg(t_us=draw(timestamps), v=draw(f32_floats), omega=draw(f32_floats))
    if which == 2:
        return GestureAckMsg(gesture_id=draw(st.integers(min_value=1, max_value=5)))
    if which == 3:
        return ModeMsg(mode=draw(st.integers(min_value=0, max_value=1)))
    if which == 4:
        return TelemetryMsg(data=draw(st.binary(max_size=200)))
    return HelloMsg(role=draw(st.integers(min_value=0, max_value=2)))


class TestFrameLayout:
    def test_zero_velocity_frame_bytes(self):
        frame = encode(VelocityCmdMsg(t_us=0, v=0.0, omega=0.0))
        assert frame[:8] == bytes.fromhex("57 50 01 02 10 00 00 00".replace(" ", ""))
        assert frame[8:24] == bytes(16)
        crc = crc32_reference(frame[3:24])
        assert frame[24:28] == struct.pack("<I", crc)
        assert len(frame) == HEADER_LEN + 16 + CRC_LEN

    @given(messages())
    @settings(max_examples=200)
    def test_crc_matches_independent_implementation(self, msg):
        frame = encode(msg)
        body = frame[3:-CRC_LEN]
        (stored,) = struct.unpack("<I", frame[-CRC_LEN:])
        assert stored == crc32_reference(body)

    def test_magic_and_version_prefix_every_frame(self):
        for msg in (GestureAckMsg(3), ModeMsg(1), HelloMsg(2)):
            frame = encode(msg)
            assert frame[:2] == MAGIC
            assert frame[2] == VERSION


class TestEncodeValidation:
    def test_gesture_id_range(self):
        with pytest.raises(EncodeError):
            encode(GestureAckMsg(gesture_id=9))
        with pytest.raises(EncodeError):
            encode(GestureAckMsg(gesture_id=0))

    def test_mode_byte_range(self):
        with pytest.raises(EncodeError):
            encode(ModeMsg(mode=2))

    def test_role_byte_range(self):
        with pytest.raises(EncodeError):
            encode(HelloMsg(role=7))

    def test_negative_timestamp(self):
        with pytest.raises(EncodeError):
            encode(VelocityCmdMsg(t_us=-1, v=0.0, omega=0.0))


class TestRoundTrip:
    @given(messages())
    @settings(max_examples=500)
    def test_decode_inverts_encode(self, msg):
        frame = encode(msg)
        result = decode(frame)
        assert result.status is DecodeStatus.OK
        assert result.consumed == len(frame)
        assert result.message == msg

    def test_absent_magnetometer_round_trips_to_none(self):
        msg = ImuSampleMsg(t_us=5, accel=(1.0, 2.0, 3.0), gyro=(0.5, 0.25, 0.125))
        back = decode(encode(msg)).message
        assert back.mag is None

    def test_present_magnetometer_survives(self):
        msg = ImuSampleMsg(
            t_us=5, accel=(1.0, 2.0, 3.0), gyro=(0.0, 0.0, 0.0), mag=(0.5, -0.5, 1.0)
        )
        back = decode(encode(msg)).message
        assert back.mag == (0.5, -0.5, 1.0)

    def test_telemetry_payload_byte_exact(self):
        msg = TelemetryMsg.from_obj({"pose": {"x": 1.25, "y": 2.5}, "mode": "teleoperated"})
        back = decode(encode(msg)).message
        assert back == msg
        assert back.to_obj()["pose"]["x"] == 1.25


class TestStreamDecoding:
    def test_truncated_frame_is_incomplete_zero_consumed(self):
        frame = encode(VelocityCmdMsg(t_us=1, v=0.5, omega=-0.5))
        for cut in (1, 3, HEADER_LEN - 1, HEADER_LEN + 3, len(frame) - 1):
            result = decode(frame[:cut])
            assert result.status is DecodeStatus.INCOMPLETE
            assert result.consumed == 0

    def test_garbage_before_frame_is_skipped(self):
        frame = encode(ModeMsg(mode=1))
        noise = b"\x00\x12garbage:\xff\xfe"
        buf = noise + frame
        result = decode(buf)
        assert result.status is DecodeStatus.OK
        assert result.message == ModeMsg(mode=1)
        assert result.consumed == len(buf)

    def test_pure_garbage_consumed_except_trailing_magic_start(self):
        result = decode(b"\x01\x02\x03\x57")
        assert result.status is DecodeStatus.INCOMPLETE
        assert result.consumed == 3

    def test_bit_flip_detected_as_corrupt(self):
        frame = bytearray(encode(VelocityCmdMsg(t_us=7, v=0.25, omega=0.75)))
        for i in range(3, len(frame)):
            flipped = bytearray(frame)
            flipped[i] ^= 0x40
            result = decode(bytes(flipped))
            assert result.status in (DecodeStatus.CORRUPT, DecodeStatus.INCOMPLETE), i

    def test_corrupt_frame_with_embedded_good_frame_recovers(self):
        good = encode(GestureAckMsg(gesture_id=2))
        # a corrupt frame whose declared 16-byte payload swallows the good
        # frame; once the lying frame is complete its CRC fails and the
        # rescan starts inside it, where the good frame sits intact
        bad_header = MAGIC + bytes([VERSION, 0x02]) + struct.pack("<I", 16)
        buf = bad_header + good + b"\xde\xad\xbe" + b"\x00\x00\x00\x00"
        assert len(buf) == HEADER_LEN + 16 + CRC_LEN
        dec = FrameDecoder()
        msgs = dec.feed(buf)
        assert GestureAckMsg(gesture_id=2) in msgs
        assert dec.corrupt_frames >= 1

    def test_unsupported_kind_skipped_whole(self):
        import zlib

        payload = b"\x01\x02\x03"
        body = bytes([0x7F]) + struct.pack("<I", len(payload)) + payload
        frame = MAGIC + bytes([VERSION]) + body + struct.pack("<I", zlib.crc32(body))
        result = decode(frame)
        assert result.status is DecodeStatus.UNSUPPORTED_KIND
        assert result.kind == 0x7F
        assert result.consumed == len(frame)

    def test_bad_version_resyncs_past_magic(self):
        frame = bytearray(encode(ModeMsg(mode=0)))
        frame[2] = 0x02
        result = decode(bytes(frame))
        assert result.status is DecodeStatus.BAD_VERSION
        assert result.consumed == 2

    def test_oversized_length_rejected(self):
        header = MAGIC + bytes([VERSION, 0x05]) + struct.pack("<I", MAX_PAYLOAD + 1)
        result = decode(header + bytes(64))
        assert result.status is DecodeStatus.CORRUPT

    @given(st.lists(messages(), min_size=1, max_size=10))
    @settings(max_examples=100)
    def test_concatenation_decomposes_in_order(self, msgs):
        stream = b"".join(encode(m) for m in msgs)
        dec = FrameDecoder()
        out = dec.feed(stream)
        assert out == msgs
        assert dec.pending_bytes == 0

    @given(
        st.lists(messages(), min_size=1, max_size=6),
        st.integers(min_value=1, max_value=7),
    )
    @settings(max_examples=60)
    def test_arbitrary_chunking_preserves_messages(self, msgs, chunk):
        stream = b"".join(encode(m) for m in msgs)
        dec = FrameDecoder()
        out = []
        for i in range(0, len(stream), chunk):
            out.extend(dec.feed(stream[i : i + chunk]))
        assert out == msgs

    @given(st.binary(max_size=200), messages(), st.binary(max_size=200))
    @settings(max_examples=150)
    def test_frame_embedded_in_random_garbage_recovered(self, pre, msg, post):
        dec = FrameDecoder()
        out = dec.feed(pre + encode(msg) + encode(msg) + post)
        assert msg in out

    @given(st.binary(max_size=500))
    @settings(max_examples=200)
    def test_never_crashes_on_arbitrary_bytes(self, data):
        dec = FrameDecoder()
        dec.feed(data)

    def test_malformed_known_kind_payload_is_corrupt(self):
        import zlib

        body = bytes([0x03]) + struct.pack("<I", 1) + bytes([9])  # ack id 9
        frame = MAGIC + bytes([VERSION]) + body + struct.pack("<I", zlib.crc32(body))
        result = decode(frame)
        assert result.status is DecodeStatus.CORRUPT
        assert result.consumed == len(frame)


class TestRouting:
    def test_operator_imu_reaches_pipeline(self):
        msg = ImuSampleMsg(0, (0, 0, 9.8), (0, 0, 0))
        assert route(Sender.OPERATOR, msg) == (Destination.PIPELINE,)

    def test_pipeline_velocity_reaches_robot(self):
        assert route(Sender.PIPELINE, VelocityCmdMsg(0, 0.1, 0.0)) == (Destination.ROBOT,)

    def test_pipeline_ack_reaches_operator_only(self):
        assert route(Sender.PIPELINE, GestureAckMsg(3)) == (Destination.OPERATOR,)

    def test_robot_telemetry_fans_out(self):
        dests = route(Sender.ROBOT, TelemetryMsg(b"{}"))
        assert Destination.OPERATOR in dests
        assert Destination.VIEWERS in dests

    def test_operator_may_not_command_velocity(self):
        with pytest.raises(ProtocolError):
            route(Sender.OPERATOR, VelocityCmdMsg(0, 0.5, 0.0))

    def test_viewer_may_not_send_anything(self):
        with pytest.raises(ProtocolError):
            route(Sender.VIEWER, TelemetryMsg(b"{}"))
        with pytest.raises(ProtocolError):
            route(Sender.VIEWER, ImuSampleMsg(0, (0, 0, 0), (0, 0, 0)))

    def test_late_hello_rejected(self):
        with pytest.raises(ProtocolError):
            route(Sender.OPERATOR, HelloMsg(role=0))

    def test_role_bytes_map_to_senders(self):
        assert sender_for_role(0) is Sender.OPERATOR
        assert sender_for_role(1) is Sender.ROBOT
        assert sender_for_role(2) is Sender.VIEWER
        with pytest.raises(ProtocolError):
            sender_for_role(3)
