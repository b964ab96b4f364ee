"""Recognition accuracy versus sensor noise for the template matcher.

Prints per-class hit rates and the pure-noise false-fire rate across a
sigma sweep. The shipped calibration sigma should sit comfortably inside
the flat top of this curve; if it does not, the synthesis model and the
matcher threshold have drifted apart.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wristdrive.gesture import (
    CALIBRATED_NOISE_SIGMA,
    GestureClass,
    canonical_templates,
    match_window,
    synthesize_gesture,
)


def sweep(sigmas, trials, seed):
    templates = canonical_templates()
    n = len(synthesize_gesture(GestureClass.UP))
    rows = []
    for sigma in sigmas:
        hits = {g: 0 for g in GestureClass}
        for g in GestureClass:
            for i in range(trials):
                ep = synthesize_gesture(g, rng_seed=seed + i, noise_sigma=sigma)
                if match_window(ep.data, templates, t_us=10**6).gesture is g:
                    hits[g] += 1
        rng = np.random.default_rng(seed)
        false_fires = sum(
            match_window(
                rng.normal(0.0, max(sigma, 0.05), size=(6, n)), templates, t_us=10**6
            ).gesture
            is not None
            for _ in range(trials)
        )
        rows.append((sigma, hits, false_fires))
    return rows


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--sigmas",
        type=float,
        nargs="+",
        default=[0.0, 0.1, 0.25, 0.4, 0.6, 0.8, 1.0],
    )
    args = ap.parse_args()

    labels = [g.label for g in GestureClass]
    print(f"{'sigma':>6} " + " ".join(f"{lb:>7}" for lb in labels) + f" {'false':>6}")
    for sigma, hits, false_fires in sweep(args.sigmas, args.trials, args.seed):
        mark = " <- calibrated" if abs(sigma - CALIBRATED_NOISE_SIGMA) < 1e-9 else ""
        cells = " ".join(f"{hits[g] / args.trials:>7.2f}" for g in GestureClass)
        print(f"{sigma:>6.2f} {cells} {false_fires:>6}{mark}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
