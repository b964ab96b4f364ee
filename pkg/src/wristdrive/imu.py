"""Inertial ingestion: samples, roll/pitch estimation, sliding signal windows.

Axis convention (documented once, used everywhere): device x runs along the
forearm, z points out of the watch face, y completes the right-handed frame.
Roll is rotation about x, pitch about y. Both angles are clamped (not
wrapped) to [-pi/2, pi/2].
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DataError

HALF_PI = math.pi / 2.0
DEFAULT_SAMPLE_RATE_HZ = 50.0
DEFAULT_FILTER_ALPHA = 0.98

# Channel order shared by the signal window, the gesture matcher, and the
# template store.
MATCH_CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz")


class IndeterminateOrientationError(ValueError):
    """Zero-norm acceleration carries no gravity direction."""


class StaleSampleError(ValueError):
    """Sample timestamp does not advance past the newest buffered one."""


class TraceFormatError(DataError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def clamp_angle(angle: float) -> float:
    """Clamp to [-pi/2, pi/2]; identity for in-range angles."""
    return max(-HALF_PI, min(HALF_PI, angle))


@dataclass(frozen=True, slots=True)
class ImuSample:
    """One timestamped 9-axis inertial measurement.

    t_us is microseconds since stream start. accel in m/s^2, gyro in rad/s,
    mag in normalized units or None when the device has no magnetometer.
    """

    t_us: int
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    mag: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        for v in (*self.accel, *self.gyro):
            if not math.isfinite(v):
                raise ValueError("accel/gyro components must be finite")

    def channel_values(self) -> tuple[float, ...]:
        return (*self.accel, *self.gyro)


@dataclass(frozen=True, slots=True)
class OrientationEstimate:
    roll: float
    pitch: float
    t_us: int


def accel_to_roll_pitch(sample: ImuSample) -> tuple[float, float]:
    """Gravity-vector decomposition of one accelerometer reading.

    roll = atan2(ay, az), pitch = atan2(-ax, sqrt(ay^2 + az^2)), both clamped.
    Scale-invariant: any positive rescaling of accel yields the same angles.
    """
    ax, ay, az = sample.accel
    if ax == 0.0 and ay == 0.0 and az == 0.0:
        raise IndeterminateOrientationError("zero-norm acceleration")
    roll = math.atan2(ay, az)
    pitch = math.atan2(-ax, math.hypot(ay, az))
    return clamp_angle(roll), clamp_angle(pitch)


def update_orientation(
    prev: OrientationEstimate,
    sample: ImuSample,
    dt: float,
    alpha: float = DEFAULT_FILTER_ALPHA,
) -> OrientationEstimate:
    """First-order complementary filter step.

    Blends gyro integration (weight alpha) with the accelerometer angles
    (weight 1 - alpha). alpha = 1 is pure integration, alpha = 0 is a pure
    accelerometer readout. A zero-norm accel sample degrades this step to
    pure integration regardless of alpha.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    gx, gy, _ = sample.gyro
    roll_gyro = prev.roll + gx * dt
    pitch_gyro = prev.pitch + gy * dt
    try:
        roll_acc, pitch_acc = accel_to_roll_pitch(sample)
    except IndeterminateOrientationError:
        roll_acc, pitch_acc = roll_gyro, pitch_gyro
    roll = alpha * roll_gyro + (1.0 - alpha) * roll_acc
    pitch = alpha * pitch_gyro + (1.0 - alpha) * pitch_acc
    return OrientationEstimate(clamp_angle(roll), clamp_angle(pitch), sample.t_us)


class SignalWindow:
    """Fixed-capacity ring of the most recent accel+gyro samples.

    Single-writer: one ingest stage owns the window; the matcher consumes
    read-only snapshots. Oldest samples are evicted first.
    """

    def __init__(self, capacity: int, rate_hz: float = DEFAULT_SAMPLE_RATE_HZ):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rate_hz = rate_hz
        self.channels = len(MATCH_CHANNELS)
        self._t_us: deque[int] = deque(maxlen=capacity)
        self._values: deque[tuple[float, ...]] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._t_us)

    @property
    def end_t_us(self) -> int | None:
        return self._t_us[-1] if self._t_us else None

    def push(self, sample: ImuSample) -> None:
        newest = self.end_t_us
        if newest is not None and sample.t_us <= newest:
            raise StaleSampleError(
                f"sample at {sample.t_us} us is not newer than {newest} us"
            )
        self._t_us.append(sample.t_us)
        self._values.append(sample.channel_values())

    def timestamps(self) -> tuple[int, ...]:
        return tuple(self._t_us)

    def snapshot(self) -> np.ndarray:
        """Copy of the buffered signal, shape (channels, length)."""
        if not self._values:
            return np.empty((self.channels, 0))
        return np.array(self._values, dtype=float).T


# Trace files: one JSON object per line. Field names are part of the replay
# contract; mx/my/mz appear together or not at all.
_REQUIRED_FIELDS = ("t_us", "ax", "ay", "az", "gx", "gy", "gz")
_MAG_FIELDS = ("mx", "my", "mz")


def _sample_from_record(rec: dict, line_no: int) -> ImuSample:
    if not isinstance(rec, dict):
        raise TraceFormatError("record is not an object", line_no)
    unknown = set(rec) - set(_REQUIRED_FIELDS) - set(_MAG_FIELDS)
    if unknown:
        raise TraceFormatError(f"unexpected field(s) {sorted(unknown)}", line_no)
    missing = [f for f in _REQUIRED_FIELDS if f not in rec]
    if missing:
        raise TraceFormatError(f"missing field(s) {missing}", line_no)
    t_us = rec["t_us"]
    if not isinstance(t_us, int) or isinstance(t_us, bool):
        raise TraceFormatError("t_us must be an integer", line_no)
    present_mag = [f for f in _MAG_FIELDS if f in rec]
    if present_mag and len(present_mag) != len(_MAG_FIELDS):
        raise TraceFormatError("mx/my/mz must appear together", line_no)
    try:
        accel = (float(rec["ax"]), float(rec["ay"]), float(rec["az"]))
        gyro = (float(rec["gx"]), float(rec["gy"]), float(rec["gz"]))
        mag = None
        if present_mag:
            mag = (float(rec["mx"]), float(rec["my"]), float(rec["mz"]))
        return ImuSample(t_us=t_us, accel=accel, gyro=gyro, mag=mag)
    except (TypeError, ValueError) as exc:
        raise TraceFormatError(str(exc), line_no) from exc


def read_trace(path: str | Path) -> list[ImuSample]:
    """Read a whole trace file, enforcing strictly increasing t_us.

    Eager by design: a malformed line anywhere fails the read before any
    sample is consumed.
    """
    out: list[ImuSample] = []
    prev_t: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"invalid JSON: {exc}", line_no) from exc
            sample = _sample_from_record(rec, line_no)
            if prev_t is not None and sample.t_us <= prev_t:
                raise TraceFormatError(
                    f"t_us {sample.t_us} does not increase past {prev_t}", line_no
                )
            prev_t = sample.t_us
            out.append(sample)
    return out


def write_trace(path: str | Path, samples: Iterable[ImuSample]) -> int:
    """Write samples as one JSON record per line; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            rec = {
                "t_us": s.t_us,
                "ax": s.accel[0],
                "ay": s.accel[1],
                "az": s.accel[2],
                "gx": s.gyro[0],
                "gy": s.gyro[1],
                "gz": s.gyro[2],
            }
            if s.mag is not None:
                rec["mx"], rec["my"], rec["mz"] = s.mag
            fh.write(json.dumps(rec) + "\n")
            n += 1
    return n
