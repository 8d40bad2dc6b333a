"""Run metrics: center displacement, corridor width, and pole detection error.

A run directory holds ``trajectory.csv``, ``inrow.csv``, ``events.jsonl``
and ``world.json``; ``RunLog`` is the in-memory form of the first three.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .end_row import POLICIES
from .simulator import World

OUTLIER_DISTANCE = 1.0


class EvaluationError(ValueError):
    pass


@dataclass
class RunLog:
    trajectory: np.ndarray = field(default_factory=lambda: np.empty((0, 4)))  # t, x, y, heading
    in_row: list[dict] = field(default_factory=list)
    end_row: list[dict] = field(default_factory=list)
    world: World | None = None

    def __post_init__(self):
        t = self.trajectory[:, 0] if len(self.trajectory) else np.empty(0)
        if np.any(np.diff(t) <= 0):
            raise EvaluationError("trajectory timestamps must be strictly increasing")


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "max": float(v.max()), "min": float(v.min()), "count": int(v.size)}


def _corridor_samples(records: list[dict], world: World, margin: float) -> list[tuple[dict, float]]:
    """(record, signed offset from the corridor center line) for samples inside a corridor."""
    L = world.config.row_length
    rows = world.row_y
    out = []
    for r in records:
        if r.get("row_ended"):
            continue
        x, y = r["x"], r["y"]
        if not (margin <= x <= L - margin):
            continue
        j = int(np.searchsorted(rows, y)) - 1
        if 0 <= j < len(rows) - 1:
            out.append((r, y - (rows[j] + rows[j + 1]) / 2))
    return out


def center_displacement(log: RunLog, world: World | None = None) -> tuple[float, float]:
    """Mean and max |distance| between the robot and the corridor center line.

    Uses ground-truth poses when the log has them and a world is known,
    otherwise half the difference of the measured side distances.
    """
    world = world or log.world
    recs = log.in_row
    if world is not None and recs and "x" in recs[0]:
        d = [abs(off) for _, off in _corridor_samples(recs, world, 0.0)]
    else:
        d = [abs(r["left"] - r["right"]) / 2 for r in recs if not r.get("row_ended")]
    if not d:
        raise EvaluationError("no in-row samples")
    d = np.asarray(d)
    return float(d.mean()), float(d.max())


def corridor_width_stats(log: RunLog, world: World | None = None, margin: float = 1.0) -> tuple[float, float, float]:
    """Mean, max, min of (left + right) side distances over in-row samples.

    With a world and ground-truth poses, samples within ``margin`` of a row
    end are skipped, since the side rectangles then reach past the rows.
    """
    world = world or log.world
    recs = log.in_row
    if world is not None and recs and "x" in recs[0]:
        recs = [r for r, _ in _corridor_samples(recs, world, margin)]
    else:
        recs = [r for r in recs if not r.get("row_ended")]
    if not recs:
        raise EvaluationError("no in-row samples")
    w = np.array([r["left"] + r["right"] for r in recs])
    return float(w.mean()), float(w.max()), float(w.min())


def detection_errors(points: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """Distance from each detected point to its nearest true pole center."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    poles = np.asarray(poles, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return np.empty(0)
    d = np.hypot(points[:, None, 0] - poles[None, :, 0], points[:, None, 1] - poles[None, :, 1])
    return d.min(axis=1)


def pole_detection_error(log: RunLog, world: World | None = None) -> dict:
    """Per-policy mean/max/min distance from world-frame end points to the
    nearest row-end pole; detections further than 1 m are outliers."""
    world = world or log.world
    if world is None:
        raise EvaluationError("pole detection error needs the world ground truth")
    poles = world.end_poles
    by_policy = {p: [] for p in POLICIES}
    for rec in log.end_row:
        for ep in rec["end_points"]:
            if "wx" in ep:
                by_policy[ep["policy"]].append((ep["wx"], ep["wy"]))
    out = {}
    for policy, pts in by_policy.items():
        if not pts:
            continue
        err = detection_errors(np.array(pts), poles)
        inl = err[err <= OUTLIER_DISTANCE]
        out[policy] = _stats(inl) if inl.size else {"mean": math.nan, "max": math.nan, "min": math.nan, "count": 0}
        out[policy]["outliers"] = int(np.count_nonzero(err > OUTLIER_DISTANCE))
    if not out:
        raise EvaluationError("no end-row detections")
    return out


# -- run directory I/O ------------------------------------------------------

TRAJECTORY_HEADER = ["t", "x", "y", "heading"]
IN_ROW_FIELDS = ["t", "x", "y", "heading", "odom_x", "odom_y", "odom_heading", "left", "right",
                 "cone_left", "cone_right", "offset", "v", "omega", "row_ended"]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.6f}"


def write_csv(path, header, rows) -> None:
    """Write rows with floats at 6 decimals; ``path`` may be an open text file."""
    if hasattr(path, "write"):
        w = csv.writer(path, lineterminator="\n")
        w.writerow(header)
        w.writerows([_fmt(v) for v in row] for row in rows)
        return
    with open(path, "w", newline="") as fh:
        write_csv(fh, header, rows)


def write_in_row_csv(path, records: list[dict]) -> None:
    fields = [f for f in IN_ROW_FIELDS if not records or f in records[0]]
    write_csv(path, fields, ([r[f] for f in fields] for r in records))


def read_csv_dicts(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def load_run_log(run_dir, world: World | None = None) -> RunLog:
    run_dir = Path(run_dir)
    traj = read_csv_dicts(run_dir / "trajectory.csv") if (run_dir / "trajectory.csv").exists() else []
    arr = np.array([[r[k] for k in TRAJECTORY_HEADER] for r in traj]).reshape(-1, 4)
    in_row = read_csv_dicts(run_dir / "inrow.csv") if (run_dir / "inrow.csv").exists() else []
    end_row = []
    ev_path = run_dir / "events.jsonl"
    if ev_path.exists():
        with open(ev_path) as fh:
            end_row = [e for e in map(json.loads, fh) if e.get("type") == "end_row"]
    return RunLog(arr, in_row, end_row, world)


def metrics_report(log: RunLog, world: World | None = None, extra: dict | None = None) -> dict:
    report: dict = dict(extra or {})
    try:
        mean, mx = center_displacement(log, world)
        report["center_displacement"] = {"mean": mean, "max": mx}
    except EvaluationError as exc:
        report["center_displacement"] = {"error": str(exc)}
    try:
        mean, mx, mn = corridor_width_stats(log, world)
        report["corridor_width"] = {"mean": mean, "max": mx, "min": mn}
    except EvaluationError as exc:
        report["corridor_width"] = {"error": str(exc)}
    if (world or log.world) is not None:
        try:
            report["pole_detection_error"] = pole_detection_error(log, world)
        except EvaluationError as exc:
            report["pole_detection_error"] = {"error": str(exc)}
    return report


def format_table(report: dict) -> str:
    lines = ["Measurement                      Value"]
    lines.append("-" * 40)
    cd = report.get("center_displacement", {})
    cw = report.get("corridor_width", {})
    if "mean" in cd:
        lines.append(f"Mean center displacement   {cd['mean']:10.3f} m")
        lines.append(f"Max center displacement    {cd['max']:10.3f} m")
    if "mean" in cw:
        lines.append(f"Mean corridor width        {cw['mean']:10.3f} m")
        lines.append(f"Max corridor width         {cw['max']:10.3f} m")
        lines.append(f"Min corridor width         {cw['min']:10.3f} m")
    pde = report.get("pole_detection_error", {})
    for policy in POLICIES:
        if policy in pde and pde[policy]["count"]:
            s = pde[policy]
            lines.append(f"Pole error {policy:<13} mean {s['mean']:.3f}  max {s['max']:.3f}  min {s['min']:.3f} m"
                         f"  (n={s['count']}, outliers={s['outliers']})")
    for key in ("outcome", "collisions"):
        if key in report:
            lines.append(f"{key.capitalize():<27}{report[key]!s:>11}")
    return "\n".join(lines) + "\n"


def trajectory_svg(log: RunLog, world: World, scale: float = 20.0) -> str:
    """Trajectory over the row lines and corridor center lines, as SVG text."""
    L = world.config.row_length
    ys = world.row_y
    x0, x1 = -3.0, L + 3.0
    y0, y1 = float(ys.min()) - 2.0, float(ys.max()) + 2.0

    def px(x, y):
        return f"{(x - x0) * scale:.1f},{(y1 - y) * scale:.1f}"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{(x1 - x0) * scale:.0f}" '
             f'height="{(y1 - y0) * scale:.0f}">']
    for y in ys:
        parts.append(f'<polyline points="{px(0, y)} {px(L, y)}" stroke="green" stroke-width="3" fill="none"/>')
    for y in world.corridor_centers:
        parts.append(f'<polyline points="{px(0, y)} {px(L, y)}" stroke="gray" stroke-dasharray="4" fill="none"/>')
    pts = " ".join(px(x, y) for _, x, y, _ in log.trajectory[::5])
    parts.append(f'<polyline points="{pts}" stroke="red" stroke-width="1.5" fill="none"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
