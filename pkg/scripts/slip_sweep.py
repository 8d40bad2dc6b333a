"""Mission outcome against tread slip.

    python3 scripts/slip_sweep.py --slips 0 0.1 0.2 0.3 --seeds 10
"""
import argparse
from collections import Counter

import numpy as np

from vinenav.config import RunConfig
from vinenav.experiments import mission


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slips", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--stage", default="medium")
    args = ap.parse_args()
    print(f"{'slip':>5} {'done':>6} {'collisions':>10} {'cd mean':>8}  outcomes")
    for slip in args.slips:
        runs = [mission(RunConfig(), args.stage, s, slip) for s in range(args.seeds)]
        done = [m for m in runs if m.outcome == "Done" and m.phases.count("TurnIn") == 2]
        cd = np.mean([m.displacement[0] for m in done]) if done else float("nan")
        reasons = Counter(m.fault_reason or m.outcome for m in runs)
        print(f"{slip:5.2f} {len(done):>3}/{len(runs):<2} {sum(m.collisions for m in runs):10d} {cd:8.3f}  "
              + ", ".join(f"{k} x{v}" for k, v in reasons.items()))


if __name__ == "__main__":
    main()
