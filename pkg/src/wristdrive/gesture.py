"""Wrist-gesture templates and runtime template matching.

Five gesture classes are recognized. Templates are built offline by aligning
repeated training epochs with normalized cross-correlation and averaging
them; at runtime the trailing slice of the signal window is scored against
every template with the correlation coefficient (mean of per-channel Pearson
coefficients) and a thresholded, refractory-gated decision is emitted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .imu import MATCH_CHANNELS, ImuSample, SignalWindow

DEFAULT_SAMPLE_RATE_HZ = 50.0
DEFAULT_EPOCH_SECONDS = 1.2
DEFAULT_ALIGN_MAX_LAG = 15
DEFAULT_THRESHOLD = 0.75
DEFAULT_REFRACTORY_S = 1.0
# Noise level (sensor units, all channels) at which the synthetic corpus is
# generated; calibrated so matching stays comfortably above threshold while
# individual channels are visibly noisy.
CALIBRATED_NOISE_SIGMA = 0.25

TEMPLATE_STORE_FORMAT = "wristdrive-templates-v1"

_ACCEL_AMPLITUDE = 4.0  # m/s^2 peak of the synthetic movement pulses
_GYRO_AMPLITUDE = 3.0  # rad/s peak of the synthetic rotation components


class GestureClass(IntEnum):
    """The five recognized wrist gestures. Ids 1-5 are the wire encoding."""

    UP = 1
    DOWN = 2
    CIRCLE = 3
    LEFT = 4
    RIGHT = 5

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "GestureClass":
        try:
            return cls[label.upper()]
        except KeyError:
            raise DataError(f"unknown gesture class {label!r}") from None


class DegenerateSignalError(ValueError):
    """A channel with zero variance cannot be correlated."""


class AlignmentError(ValueError):
    pass


class TemplateStoreError(DataError):
    pass


class SidecarError(DataError):
    pass


@dataclass(eq=False)
class Epoch:
    """A fixed-order multi-channel signal slice (accel xyz + gyro xyz)."""

    data: np.ndarray  # shape (channels, length), float64
    rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("epoch data must be 2-D (channels, length)")
        if self.data.shape[1] < 2:
            raise ValueError("epoch length must be >= 2")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class GestureTemplate:
    gesture: GestureClass
    epoch: Epoch
    training_count: int

    def __post_init__(self) -> None:
        if self.training_count < 1:
            raise ValueError("training_count must be >= 1")

    def __len__(self) -> int:
        return len(self.epoch)


@dataclass(frozen=True, slots=True)
class MatchDecision:
    """Outcome of matching one window snapshot.

    gesture is None when nothing fired: score below threshold, degenerate
    window, or a refractory-suppressed repeat. score is the best correlation
    observed (-1.0 for a window that could not be scored at all).
    """

    gesture: GestureClass | None
    score: float
    t_us: int


def _as_2d(signal) -> np.ndarray:
    arr = signal.data if isinstance(signal, Epoch) else np.asarray(signal, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError("signal must be 1-D or 2-D")
    return arr


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.dot(xc, xc))
    sy = float(np.dot(yc, yc))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSignalError("zero-variance channel")
    r = float(np.dot(xc, yc)) / math.sqrt(sx * sy)
    return max(-1.0, min(1.0, r))


def correlation_coefficient(a, b) -> float:
    """Mean of per-channel Pearson coefficients; in [-1, 1].

    Symmetric in its arguments and invariant to per-channel affine rescaling
    with positive slope. Raises DegenerateSignalError if any channel of
    either signal is constant.
    """
    x = _as_2d(a)
    y = _as_2d(b)
    if x.shape != y.shape:
        raise ValueError(f"signal shapes differ: {x.shape} vs {y.shape}")
    if x.shape[1] < 2:
        raise ValueError("signals must hold at least 2 samples")
    return float(np.mean([_pearson(x[c], y[c]) for c in range(x.shape[0])]))


def _check_nondegenerate(arr: np.ndarray, name: str) -> None:
    for c in range(arr.shape[0]):
        if np.ptp(arr[c]) == 0.0:
            raise DegenerateSignalError(f"{name} channel {c} is constant")


def ncc_best_lag(reference, candidate, max_lag: int) -> tuple[int, float]:
    """Lag in [-max_lag, max_lag] where the overlap correlation peaks.

    The peak is taken in magnitude (a perfectly anti-correlated candidate
    aligns at its sign-flipped phase; the returned peak keeps the sign, so
    a pure negation reports lag 0 with peak -1.0). Positive lag means the
    candidate trails the reference by that many samples (candidate[i + lag]
    lines up with reference[i]). Ties break toward the smallest |lag|, then
    toward the negative lag.
    """
    ref = _as_2d(reference)
    cand = _as_2d(candidate)
    if ref.shape[0] != cand.shape[0]:
        raise ValueError("channel counts differ")
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if max_lag >= min(ref.shape[1], cand.shape[1]):
        raise ValueError("max_lag must be smaller than the shortest signal")
    _check_nondegenerate(ref, "reference")
    _check_nondegenerate(cand, "candidate")

    best_key: tuple[float, int, int] | None = None
    best: tuple[int, float] | None = None
    for lag in range(-max_lag, max_lag + 1):
        lo = max(0, -lag)
        hi = min(ref.shape[1], cand.shape[1] - lag)
        if hi - lo < 2:
            continue
        try:
            value = correlation_coefficient(ref[:, lo:hi], cand[:, lo + lag : hi + lag])
        except DegenerateSignalError:
            continue
        key = (abs(value), -abs(lag), -lag)
        if best_key is None or key > best_key:
            best_key = key
            best = (lag, value)
    if best is None:
        raise DegenerateSignalError("no lag produced a correlatable overlap")
    return best


def align_epochs(epochs: Sequence[Epoch], max_lag: int = DEFAULT_ALIGN_MAX_LAG) -> list[Epoch]:
    """Shift every epoch onto the first one and crop to the common overlap.

    The first epoch anchors the alignment. Epoch j is shifted by its best
    NCC lag against the anchor; all outputs share one length.
    """
    if not epochs:
        raise ValueError("at least one epoch required")
    channels = epochs[0].channels
    for i, ep in enumerate(epochs):
        if ep.channels != channels:
            raise AlignmentError(f"epoch {i} has {ep.channels} channels, expected {channels}")
    if len(epochs) == 1:
        return [epochs[0]]

    lags = [0]
    for i, ep in enumerate(epochs[1:], start=1):
        try:
            lag, _ = ncc_best_lag(epochs[0], ep, max_lag)
        except DegenerateSignalError as exc:
            raise AlignmentError(f"epoch {i} is degenerate: {exc}") from exc
        lags.append(lag)

    # aligned_j[i] = epoch_j[i + lag_j]; keep indices valid for every epoch.
    start = max(max(0, -lag) for lag in lags)
    stop = min(len(ep) - lag for ep, lag in zip(epochs, lags))
    if stop - start < 2:
        raise AlignmentError("aligned overlap shorter than 2 samples")
    return [
        Epoch(ep.data[:, start + lag : stop + lag], ep.rate_hz)
        for ep, lag in zip(epochs, lags)
    ]


def build_template(
    gesture: GestureClass,
    epochs: Sequence[Epoch],
    max_lag: int = DEFAULT_ALIGN_MAX_LAG,
) -> GestureTemplate:
    """Align the training epochs and average them per channel and sample."""
    if not epochs:
        raise ValueError("at least one training epoch required")
    aligned = align_epochs(epochs, max_lag)
    mean = np.mean([ep.data for ep in aligned], axis=0)
    return GestureTemplate(
        gesture=gesture,
        epoch=Epoch(mean, epochs[0].rate_hz),
        training_count=len(epochs),
    )


def match_window(
    window: SignalWindow | np.ndarray,
    templates: Sequence[GestureTemplate],
    threshold: float = DEFAULT_THRESHOLD,
    refractory_s: float = DEFAULT_REFRACTORY_S,
    last_fire_us: int | None = None,
    t_us: int | None = None,
) -> MatchDecision:
    """Score the trailing window slice against every template.

    Returns the best-scoring class when its score reaches the threshold and
    the window end lies at least the refractory period past last_fire_us;
    otherwise a decision with gesture None. Degenerate slices (an idle wrist
    produces near-constant signals) yield no match rather than an error.
    Ties across classes break by the fixed class-id order.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    if isinstance(window, SignalWindow):
        arr = window.snapshot()
        end_us = window.end_t_us
    else:
        arr = _as_2d(window)
        end_us = t_us
    if end_us is None:
        raise ValueError("window end timestamp unknown")

    best_gesture: GestureClass | None = None
    best_score = -1.0
    for tpl in sorted(templates, key=lambda t: int(t.gesture)):
        length = len(tpl)
        if arr.shape[1] < length:
            continue
        try:
            score = correlation_coefficient(arr[:, -length:], tpl.epoch.data)
        except DegenerateSignalError:
            continue
        if score > best_score:
            best_score = score
            best_gesture = tpl.gesture

    fired = (
        best_gesture is not None
        and best_score >= threshold
        and (last_fire_us is None or end_us - last_fire_us >= refractory_s * 1e6)
    )
    return MatchDecision(
        gesture=best_gesture if fired else None,
        score=best_score,
        t_us=end_us,
    )


def _class_signature(gesture: GestureClass, n: int) -> np.ndarray:
    """Deterministic 6-channel waveform for one gesture class.

    Every channel carries class-specific content so the mean-of-channels
    correlation stays informative; the physically motivated channel holds
    the dominant component. Up/Down and Left/Right are exact negations.
    """
    tau = np.linspace(0.0, 1.0, n)
    env = np.sin(np.pi * tau) ** 2
    w1 = np.sin(2.0 * np.pi * tau) * env
    w2 = np.cos(2.0 * np.pi * tau) * env
    w3 = np.sin(4.0 * np.pi * tau) * env
    w4 = np.cos(4.0 * np.pi * tau) * env
    a, g = _ACCEL_AMPLITUDE, _GYRO_AMPLITUDE

    if gesture in (GestureClass.UP, GestureClass.DOWN):
        base = np.stack(
            [0.5 * a * w3, 0.3 * a * w2, a * w1, 0.4 * g * w2, g * w1, 0.3 * g * w3]
        )
        return base if gesture is GestureClass.UP else -base
    if gesture in (GestureClass.LEFT, GestureClass.RIGHT):
        base = np.stack(
            [0.4 * a * w2, a * w1, 0.3 * a * w3, g * w1, 0.4 * g * w3, 0.5 * g * w2]
        )
        return base if gesture is GestureClass.LEFT else -base
    # Circle: quarter-period-offset sinusoids on the first two gyro channels.
    return np.stack(
        [
            0.3 * a * w4,
            0.3 * a * w3,
            0.25 * a * w2,
            g * np.sin(2.0 * np.pi * tau),
            g * np.cos(2.0 * np.pi * tau),
            0.4 * g * w1,
        ]
    )


def synthesize_gesture(
    gesture: GestureClass,
    rng_seed: int = 0,
    noise_sigma: float = 0.0,
    rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    duration_s: float = DEFAULT_EPOCH_SECONDS,
) -> Epoch:
    """Parametric stand-in for a recorded gesture repetition.

    Deterministic given (gesture, rng_seed, noise_sigma); with sigma 0 the
    seed has no effect at all.
    """
    if noise_sigma < 0.0:
        raise ValueError("noise_sigma must be >= 0")
    n = int(round(rate_hz * duration_s))
    data = _class_signature(gesture, n)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(rng_seed)
        data = data + rng.normal(0.0, noise_sigma, size=data.shape)
    return Epoch(data, rate_hz)


def canonical_templates(rate_hz: float = DEFAULT_SAMPLE_RATE_HZ) -> list[GestureTemplate]:
    """Noise-free single-epoch templates for all five classes."""
    return [
        build_template(g, [synthesize_gesture(g, rate_hz=rate_hz)])
        for g in GestureClass
    ]


def epoch_to_samples(
    epoch: Epoch, start_t_us: int = 0, base: Sequence[float] | None = None
) -> list[ImuSample]:
    """Render an epoch as a timestamped sample stream (testing/replay aid).

    base, when given, is a 6-value offset added to every sample, e.g. a
    gravity baseline.
    """
    dt_us = int(round(1e6 / epoch.rate_hz))
    offset = np.zeros(6) if base is None else np.asarray(base, dtype=float)
    out = []
    for i in range(len(epoch)):
        v = epoch.data[:, i] + offset
        out.append(
            ImuSample(
                t_us=start_t_us + i * dt_us,
                accel=(v[0], v[1], v[2]),
                gyro=(v[3], v[4], v[5]),
            )
        )
    return out


def save_templates(path: str | Path, templates: Sequence[GestureTemplate]) -> None:
    doc = {
        "format": TEMPLATE_STORE_FORMAT,
        "channels": list(MATCH_CHANNELS),
        "templates": [
            {
                "class_id": int(t.gesture),
                "class": t.gesture.label,
                "training_count": t.training_count,
                "sample_rate_hz": t.epoch.rate_hz,
                "samples": [list(row) for row in t.epoch.data],
            }
            for t in templates
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_templates(path: str | Path) -> list[GestureTemplate]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateStoreError(f"invalid JSON in template store: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != TEMPLATE_STORE_FORMAT:
        raise TemplateStoreError(
            f"not a template store (expected format {TEMPLATE_STORE_FORMAT!r})"
        )
    out = []
    for i, entry in enumerate(doc.get("templates", [])):
        try:
            gesture = GestureClass(entry["class_id"])
            rows = np.asarray(entry["samples"], dtype=float)
            out.append(
                GestureTemplate(
                    gesture=gesture,
                    epoch=Epoch(rows, float(entry["sample_rate_hz"])),
                    training_count=int(entry["training_count"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TemplateStoreError(f"template entry {i}: {exc}") from exc
    return out


@dataclass(frozen=True, slots=True)
class EpochInterval:
    start_us: int
    end_us: int
    gesture: GestureClass


def read_sidecar(path: str | Path) -> list[EpochInterval]:
    """Parse an epoch-boundary sidecar: one (start_us, end_us, class) per line."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                start_us = int(rec["start_us"])
                end_us = int(rec["end_us"])
                gesture = GestureClass.from_label(str(rec["class"]))
            except DataError:
                raise
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise SidecarError(f"line {line_no}: {exc}") from exc
            if end_us <= start_us:
                raise SidecarError(f"line {line_no}: empty interval")
            out.append(EpochInterval(start_us, end_us, gesture))
    return out


def extract_epochs(
    samples: Sequence[ImuSample],
    intervals: Iterable[EpochInterval],
    rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> dict[GestureClass, list[Epoch]]:
    """Cut sidecar intervals out of a trace, keyed by gesture class."""
    if not samples:
        raise SidecarError("trace holds no samples")
    times = [s.t_us for s in samples]
    first, last = times[0], times[-1]
    grouped: dict[GestureClass, list[Epoch]] = {}
    for iv in intervals:
        if iv.start_us < first or iv.end_us > last:
            raise SidecarError(
                f"interval [{iv.start_us}, {iv.end_us}] lies outside the trace "
                f"[{first}, {last}]"
            )
        chunk = [s for s in samples if iv.start_us <= s.t_us <= iv.end_us]
        if len(chunk) < 2:
            raise SidecarError(
                f"interval [{iv.start_us}, {iv.end_us}] covers fewer than 2 samples"
            )
        data = np.array([s.channel_values() for s in chunk], dtype=float).T
        grouped.setdefault(iv.gesture, []).append(Epoch(data, rate_hz))
    return grouped
