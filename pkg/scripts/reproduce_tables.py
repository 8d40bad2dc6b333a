"""Per-stage in-row accuracy and corridor width, plus headland pole detection.

    python3 scripts/reproduce_tables.py --seeds 5 --scenes 100
"""
import argparse
import time

import numpy as np

from vinenav.config import RunConfig
from vinenav.experiments import STAGES, mission_batch, pole_detection_study


def stage_table(seeds: int, slip: float) -> None:
    print(f"{'stage':8} {'runs':>5} {'cd mean':>8} {'cd max':>8} {'w mean':>7} {'w max':>7} {'w min':>7}")
    for stage in STAGES:
        runs = mission_batch(RunConfig(), (stage,), range(seeds), slip)
        ok = [m for m in runs if m.outcome == "Done" and m.displacement and m.width]
        if not ok:
            print(f"{stage:8} {0:>2}/{len(runs):<2}")
            continue
        cd = np.mean([m.displacement for m in ok], axis=0)
        w = np.mean([m.width for m in ok], axis=0)
        print(f"{stage:8} {len(ok):>2}/{len(runs):<2} {cd[0]:8.3f} {cd[1]:8.3f} {w[0]:7.3f} {w[1]:7.3f} {w[2]:7.3f}")


def pole_table(scenes: int, noise: float) -> None:
    rep = pole_detection_study(scenes, noise)
    print(f"{'policy':13} {'mean':>6} {'max':>6} {'min':>6} {'n':>5} {'outliers':>8}")
    for policy, r in rep.items():
        print(f"{policy:13} {r['mean']:6.3f} {r['max']:6.3f} {r['min']:6.3f} {r['count']:5d} {r['outliers']:8d}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--slip", type=float, default=0.0)
    ap.add_argument("--scenes", type=int, default=100)
    ap.add_argument("--noise", type=float, default=0.02)
    args = ap.parse_args()
    t0 = time.perf_counter()
    stage_table(args.seeds, args.slip)
    print()
    pole_table(args.scenes, args.noise)
    print(f"\n{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
