"""Drive the scripted pilot through every built-in course and tabulate scores.

Travel times here are regression fixtures for the autopilot tuning, nothing
more; rerun after touching the route tables or the controller gains and
compare against the last committed output.
"""

import argparse
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wristdrive.runner import run_scenario
from wristdrive.scenarios import BUILTIN_NAMES


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--tick-hz", type=float, default=50.0)
    ap.add_argument(
        "--scenario", choices=sorted(BUILTIN_NAMES), action="append", default=None
    )
    args = ap.parse_args()
    names = args.scenario or sorted(BUILTIN_NAMES)

    print(f"{'course':<10} {'seed':>4} {'travel_s':>9} {'pins':>4} {'total_s':>9} goal")
    for name in names:
        totals = []
        for seed in args.seeds:
            rep = run_scenario(name, seed=seed, tick_hz=args.tick_hz)
            totals.append(rep.total_s)
            print(
                f"{name:<10} {seed:>4} {rep.travel_s:>9.2f} {rep.pins_touched:>4}"
                f" {rep.total_s:>9.2f} {'yes' if rep.goal_reached else 'NO'}"
            )
        print(
            f"{name:<10} mean total {statistics.mean(totals):.2f}"
            f"  spread {max(totals) - min(totals):.2f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
