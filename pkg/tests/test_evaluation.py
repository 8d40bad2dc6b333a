import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinenav.evaluation import (EvaluationError, RunLog, center_displacement, corridor_width_stats, detection_errors,
                                format_table, load_run_log, metrics_report, pole_detection_error, trajectory_svg,
                                write_csv, write_in_row_csv)
from vinenav.geometry import Pose2
from vinenav.in_row import InRowConfig, InRowState, in_row_step
from vinenav.simulator import WorldConfig, generate_world

from conftest import rot, wall_scan

WORLD = generate_world(WorldConfig(n_rows=2))


def records(ys, xs=None):
    xs = np.linspace(2, 30, len(ys)) if xs is None else xs
    return [{"t": 0.1 * i, "x": float(x), "y": float(y), "left": 1.0, "right": 1.0} for i, (x, y) in
            enumerate(zip(xs, ys))]


def test_displacement_on_center_line():
    log = RunLog(in_row=records([1.0] * 20), world=WORLD)
    assert center_displacement(log) == (0.0, 0.0)


def test_constant_offset():
    log = RunLog(in_row=records([1.1] * 20), world=WORLD)
    assert center_displacement(log) == pytest.approx((0.1, 0.1))


def test_displacement_without_ground_truth_uses_sides():
    recs = [{"t": 0.0, "left": 1.2, "right": 0.8}, {"t": 0.1, "left": 1.0, "right": 1.0}]
    assert center_displacement(RunLog(in_row=recs)) == pytest.approx((0.1, 0.2))


def test_empty_logs_raise():
    with pytest.raises(EvaluationError):
        center_displacement(RunLog())
    with pytest.raises(EvaluationError):
        corridor_width_stats(RunLog())
    with pytest.raises(EvaluationError):
        pole_detection_error(RunLog(world=WORLD))


def test_width_of_synthetic_walls():
    cfg = InRowConfig()
    recs = []
    for k in range(20):
        _, s = in_row_step(wall_scan(1.0, 1.0, t=0.1 * k), Pose2(), InRowState(), cfg)
        recs.append({"t": 0.1 * k, "left": s.left_distance, "right": s.right_distance})
    mean, mx, mn = corridor_width_stats(RunLog(in_row=recs))
    for v in (mean, mx, mn):
        assert v == pytest.approx(2.0, abs=2 * cfg.side_rect_growth_step)


def end_row_log(points):
    return RunLog(end_row=[{"end_points": [{"policy": "nearest", "wx": x, "wy": y} for x, y in points]}], world=WORLD)


def test_pole_error_examples():
    assert pole_detection_error(end_row_log([(36.0, 2.0)]))["nearest"]["mean"] == 0.0
    assert pole_detection_error(end_row_log([(36.1, 2.0)]))["nearest"]["mean"] == pytest.approx(0.1)
    rep = pole_detection_error(end_row_log([(36.1, 2.0), (30.0, 1.0)]))["nearest"]
    assert rep["outliers"] == 1 and rep["count"] == 1


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(0, 36), st.floats(0.05, 1.95)), min_size=1, max_size=30), st.randoms())
def test_metrics_permutation_invariant_and_ordered(points, rnd):
    xs, ys = zip(*points)
    recs = records(ys, xs)
    for r in recs:
        r["left"], r["right"] = r["y"], 2.0 - r["y"]
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    a = RunLog(in_row=recs, world=WORLD)
    b = RunLog(in_row=shuffled, world=WORLD)
    assert center_displacement(a) == pytest.approx(center_displacement(b))
    try:
        wa = corridor_width_stats(a)
    except EvaluationError:
        return
    assert wa == pytest.approx(corridor_width_stats(b))
    mean, mx, mn = wa
    assert mn <= mean + 1e-12 and mean <= mx + 1e-12


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=20),
       st.floats(-math.pi, math.pi), st.floats(-50, 50), st.floats(-50, 50))
def test_detection_errors_rigid_invariant(points, theta, tx, ty):
    pts = np.array(points)
    poles = WORLD.end_poles
    R = rot(theta)
    moved = detection_errors(pts @ R.T + (tx, ty), poles @ R.T + (tx, ty))
    np.testing.assert_allclose(moved, detection_errors(pts, poles), atol=1e-9)


def test_timestamps_must_increase():
    with pytest.raises(EvaluationError):
        RunLog(trajectory=np.array([[0.0, 0, 0, 0], [0.0, 1, 0, 0]]))


def test_csv_formatting():
    buf = io.StringIO()
    write_csv(buf, ["t", "phase", "v"], [(0.1, "InRow", 1), (0.2, "Done", 0.123456789)])
    assert buf.getvalue() == "t,phase,v\n0.100000,InRow,1\n0.200000,Done,0.123457\n"


def test_run_directory_round_trip(tmp_path, default_run):
    from vinenav.cli import write_run

    metrics = write_run(default_run, tmp_path, svg=True)
    log = load_run_log(tmp_path, default_run.world)
    again = metrics_report(log, default_run.world)
    # csv files carry 6 decimals
    for key in ("mean", "max"):
        assert again["center_displacement"][key] == pytest.approx(metrics["center_displacement"][key], abs=1e-5)
    assert again["corridor_width"]["min"] == pytest.approx(metrics["corridor_width"]["min"], abs=1e-5)
    assert "Mean center displacement" in format_table(metrics)
    assert (tmp_path / "trajectory.svg").read_text().startswith("<svg")
    assert trajectory_svg(log, default_run.world).count("<polyline") == 4 + 3 + 1


def test_in_row_csv_columns(tmp_path):
    write_in_row_csv(tmp_path / "a.csv", [{"t": 0.0, "left": 1.0, "right": 1.0}])
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,left,right"
