"""Planar primitives shared by the perception, control and simulation code.

World frame: x east, y north, headings counter-clockwise from +x.
A ``Pose2`` describes a body frame whose x axis points at ``heading``.
The robot's direction of travel is body +y (see ``odometry``), so a robot
with heading 0 drives north.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)

    @property
    def forward(self) -> tuple[float, float]:
        """Unit vector of body +y (direction of travel) in the parent frame."""
        return -math.sin(self.heading), math.cos(self.heading)


@dataclass(frozen=True)
class Cone2:
    apex: Point2
    axis_heading: float
    left_half_angle: float
    right_half_angle: float
    length: float

    def __post_init__(self):
        if self.left_half_angle < 0 or self.right_half_angle < 0:
            raise ValueError("cone half-angles must be >= 0")
        if not self.length > 0:
            raise ValueError("cone length must be > 0")


@dataclass(frozen=True)
class Rect2:
    center: Point2
    heading: float
    half_length: float
    half_width: float

    def __post_init__(self):
        if not (self.half_length > 0 and self.half_width > 0):
            raise ValueError("rectangle half extents must be > 0")


@dataclass(frozen=True)
class Segment2:
    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a[0] == self.b[0] and self.a[1] == self.b[1]:
            raise ValueError("degenerate segment: a == b")

    @property
    def direction(self) -> tuple[float, float]:
        dx, dy = self.b[0] - self.a[0], self.b[1] - self.a[1]
        n = math.hypot(dx, dy)
        return dx / n, dy / n


def normalize_angle(theta: float) -> float:
    """Map ``theta`` to the half-open interval (-pi, pi]."""
    r = math.fmod(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    return r


def normalize_angles(theta: np.ndarray) -> np.ndarray:
    r = np.fmod(theta, TWO_PI)
    r = np.where(r <= -math.pi, r + TWO_PI, r)
    return np.where(r > math.pi, r - TWO_PI, r)


def transform_to_frame(p, frame: Pose2) -> Point2:
    """Express world point ``p`` in the coordinates of ``frame``."""
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    dx, dy = p[0] - frame.x, p[1] - frame.y
    return Point2(c * dx + s * dy, -s * dx + c * dy)


def transform_from_frame(p, frame: Pose2) -> Point2:
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    return Point2(frame.x + c * p[0] - s * p[1], frame.y + s * p[0] + c * p[1])


def points_to_frame(points: np.ndarray, frame: Pose2) -> np.ndarray:
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    d = np.asarray(points, dtype=float).reshape(-1, 2) - (frame.x, frame.y)
    return np.column_stack((c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]))


def points_from_frame(points: np.ndarray, frame: Pose2) -> np.ndarray:
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return np.column_stack((frame.x + c * p[:, 0] - s * p[:, 1], frame.y + s * p[:, 0] + c * p[:, 1]))


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Pose ``b`` (given in frame ``a``) expressed in ``a``'s parent frame."""
    p = transform_from_frame((b.x, b.y), a)
    return Pose2(p.x, p.y, a.heading + b.heading)


def point_in_cone(p, cone: Cone2) -> bool:
    dx, dy = p[0] - cone.apex[0], p[1] - cone.apex[1]
    if math.hypot(dx, dy) > cone.length:
        return False
    if dx == 0.0 and dy == 0.0:
        return True
    rel = normalize_angle(math.atan2(dy, dx) - cone.axis_heading)
    return -cone.right_half_angle <= rel <= cone.left_half_angle


def point_in_rect(p, rect: Rect2) -> bool:
    c, s = math.cos(rect.heading), math.sin(rect.heading)
    dx, dy = p[0] - rect.center[0], p[1] - rect.center[1]
    lx, ly = c * dx + s * dy, -s * dx + c * dy
    return abs(lx) <= rect.half_length and abs(ly) <= rect.half_width


def points_in_rect(points: np.ndarray, rect: Rect2) -> np.ndarray:
    """Vectorised ``point_in_rect`` over an (n, 2) array."""
    c, s = math.cos(rect.heading), math.sin(rect.heading)
    d = np.asarray(points, dtype=float).reshape(-1, 2) - (rect.center[0], rect.center[1])
    lx = c * d[:, 0] + s * d[:, 1]
    ly = -s * d[:, 0] + c * d[:, 1]
    return (np.abs(lx) <= rect.half_length) & (np.abs(ly) <= rect.half_width)


def project_onto_line(p, point, direction) -> Point2:
    t = (p[0] - point[0]) * direction[0] + (p[1] - point[1]) * direction[1]
    return Point2(point[0] + t * direction[0], point[1] + t * direction[1])


def distance_to_line(p, point, direction) -> float:
    """Signed perpendicular distance; positive to the left of ``direction``."""
    return direction[0] * (p[1] - point[1]) - direction[1] * (p[0] - point[0])
