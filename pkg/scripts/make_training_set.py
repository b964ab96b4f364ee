"""Fabricate a labeled wrist-motion corpus and train a template store from it.

Writes trace.jsonl, epochs.jsonl, and templates.json into the output
directory: the exact trio the `train`, `replay`, and `match` subcommands
consume, so the full offline path can be exercised without hardware.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wristdrive.gesture import GestureClass, epoch_to_samples, synthesize_gesture
from wristdrive.imu import ImuSample, write_trace
from wristdrive.runner import GRAVITY, train

import json


def build_corpus(out_dir: Path, reps: int, noise_sigma: float, rate_hz: float):
    step_us = int(round(1e6 / rate_hz))
    rest = ImuSample(t_us=0, accel=(0.0, 0.0, GRAVITY), gyro=(0.0, 0.0, 0.0))
    samples = []
    intervals = []
    t_us = 0
    seed = 0
    for _ in range(int(rate_hz)):  # one second of lead-in rest
        samples.append(ImuSample(t_us=t_us, accel=rest.accel, gyro=rest.gyro))
        t_us += step_us
    for gesture in GestureClass:
        for _ in range(reps):
            ep = synthesize_gesture(gesture, rng_seed=seed, noise_sigma=noise_sigma, rate_hz=rate_hz)
            seed += 1
            chunk = epoch_to_samples(ep, start_t_us=t_us)
            samples.extend(chunk)
            intervals.append(
                {"start_us": chunk[0].t_us, "end_us": chunk[-1].t_us, "class": gesture.label}
            )
            t_us = chunk[-1].t_us + step_us
            for _ in range(10):  # rest gap so epochs never abut
                samples.append(ImuSample(t_us=t_us, accel=rest.accel, gyro=rest.gyro))
                t_us += step_us
    write_trace(out_dir / "trace.jsonl", samples)
    with open(out_dir / "epochs.jsonl", "w", encoding="utf-8") as fh:
        for rec in intervals:
            fh.write(json.dumps(rec) + "\n")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--reps", type=int, default=10, help="epochs per class")
    ap.add_argument("--noise-sigma", type=float, default=0.25)
    ap.add_argument("--rate-hz", type=float, default=50.0)
    args = ap.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    build_corpus(args.out_dir, args.reps, args.noise_sigma, args.rate_hz)
    templates = train(
        args.out_dir / "trace.jsonl",
        args.out_dir / "epochs.jsonl",
        args.out_dir / "templates.json",
        rate_hz=args.rate_hz,
    )
    for t in templates:
        print(f"{t.gesture.label:<8} trained from {t.training_count} epochs")
    print(f"wrote {args.out_dir / 'templates.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
