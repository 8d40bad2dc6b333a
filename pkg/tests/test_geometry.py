import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vinenav.geometry import (Cone2, Point2, Pose2, Rect2, Segment2, compose, distance_to_line, normalize_angle,
                              normalize_angles, point_in_cone, point_in_rect, points_from_frame, points_in_rect,
                              points_to_frame, project_onto_line, transform_from_frame, transform_to_frame)

angles = st.floats(-50.0, 50.0, allow_nan=False)


@pytest.mark.parametrize("theta, expected", [(0.0, 0.0), (3 * math.pi, math.pi), (-math.pi, math.pi)])
def test_normalize_angle_examples(theta, expected):
    assert normalize_angle(theta) == pytest.approx(expected, abs=1e-12)


@given(angles)
def test_normalize_angle_range_and_congruence(theta):
    r = normalize_angle(theta)
    assert -math.pi < r <= math.pi
    k = (theta - r) / (2 * math.pi)
    assert k == pytest.approx(round(k), abs=1e-9)


@given(angles)
def test_normalize_angle_idempotent_and_periodic(theta):
    r = normalize_angle(theta)
    assert normalize_angle(r) == r
    assert normalize_angle(theta + 2 * math.pi) == pytest.approx(r, abs=1e-9) or \
        abs(abs(r) - math.pi) < 1e-9


def test_normalize_angles_matches_scalar():
    th = np.linspace(-20, 20, 1001)
    np.testing.assert_array_equal(normalize_angles(th), [normalize_angle(t) for t in th])


def test_pose_heading_is_normalized():
    assert Pose2(0, 0, -math.pi).heading == math.pi
    assert Pose2(0, 0, 5 * math.pi / 2).heading == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("p, frame, expected", [
    ((1, 0), Pose2(0, 0, 0), (1, 0)),
    ((1, 0), Pose2(0, 0, math.pi / 2), (0, -1)),
    ((2, 3), Pose2(1, 1, math.pi), (-1, -2)),
])
def test_transform_to_frame_examples(p, frame, expected):
    q = transform_to_frame(p, frame)
    assert q.x == pytest.approx(expected[0], abs=1e-12)
    assert q.y == pytest.approx(expected[1], abs=1e-12)


def test_vectorised_transforms_match_scalar():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-10, 10, (50, 2))
    f = Pose2(1.5, -2.0, 0.7)
    np.testing.assert_allclose(points_to_frame(pts, f), [transform_to_frame(p, f) for p in pts], atol=1e-12)
    np.testing.assert_allclose(points_from_frame(pts, f), [transform_from_frame(p, f) for p in pts], atol=1e-12)


def test_compose_matches_sequential_transform():
    a, b = Pose2(1, 2, 0.3), Pose2(-0.5, 0.25, 1.1)
    c = compose(a, b)
    p = (0.3, -0.8)
    direct = transform_from_frame(p, c)
    nested = transform_from_frame(transform_from_frame(p, b), a)
    assert direct == pytest.approx(nested, abs=1e-12)


def test_forward_is_body_plus_y():
    f = Pose2(0, 0, -math.pi / 2).forward
    assert f == pytest.approx((1.0, 0.0), abs=1e-12)


# -- cone -------------------------------------------------------------------

CONE = Cone2(Point2(0, 0), math.pi / 2, 0.4, 0.3, 2.0)


def test_point_in_cone_examples():
    assert point_in_cone((0, 1.0), CONE)
    assert not point_in_cone((0, 4.0), CONE)
    edge = (2.0 * math.cos(math.pi / 2 + 0.4), 2.0 * math.sin(math.pi / 2 + 0.4))
    assert point_in_cone(edge, Cone2(Point2(0, 0), math.pi / 2, 0.4 + 1e-12, 0.3, 2.0 + 1e-12))


def test_cone_rejects_negative_half_angle():
    with pytest.raises(ValueError):
        Cone2(Point2(0, 0), 0.0, -0.1, 0.1, 1.0)


# -- rectangle --------------------------------------------------------------

def test_point_in_rect_examples():
    r = Rect2(Point2(0, 0), 0.0, 1.0, 1.0)
    assert point_in_rect((0.5, 0.5), r)
    assert not point_in_rect((1.5, 0), r)
    r45 = Rect2(Point2(0, 0), math.pi / 4, 1.0, 0.2)
    d = 0.9
    assert point_in_rect((d * math.cos(math.pi / 4), d * math.sin(math.pi / 4)), r45)
    assert not point_in_rect((d, 0.0), r45)


def test_rect_boundary_closed():
    r = Rect2(Point2(0, 0), 0.0, 1.0, 0.5)
    assert point_in_rect((1.0, 0.5), r)


def test_segment_rejects_degenerate():
    with pytest.raises(ValueError):
        Segment2(Point2(1, 1), Point2(1, 1))
    assert Segment2(Point2(0, 0), Point2(0, 2)).direction == (0.0, 1.0)


def test_line_helpers():
    assert project_onto_line((1, 1), (0, 0), (1, 0)) == (1, 0)
    assert distance_to_line((0, 1), (0, 0), (1, 0)) == 1.0
    assert distance_to_line((0, -1), (0, 0), (1, 0)) == -1.0
