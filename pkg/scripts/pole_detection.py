"""Row-end detection error against range noise for both policies.

    python3 scripts/pole_detection.py --noise 0 0.01 0.02 0.05 --scenes 100
"""
import argparse

from vinenav.experiments import pole_detection_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.01, 0.02, 0.05])
    ap.add_argument("--scenes", type=int, default=100)
    ap.add_argument("--stage", default="medium")
    args = ap.parse_args()
    print(f"{'noise':>6} {'nearest':>8} {'line fit':>8} {'outliers':>9}")
    for noise in args.noise:
        rep = pole_detection_study(args.scenes, noise, args.stage)
        n, lf = rep["nearest"], rep["line_fitting"]
        print(f"{noise:6.3f} {n['mean']:8.3f} {lf['mean']:8.3f} {n['outliers']:>4}/{lf['outliers']:<4}")


if __name__ == "__main__":
    main()
