"""Reactive in-row controller.

All geometry is in the body frame: +y forward, +x to the robot's right,
bearings measured from +y and positive to the left (counter-clockwise).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Cone2, Point2, Pose2, Rect2
from .odometry import Twist
from .scan import Scan2D

FORWARD = math.pi / 2  # body +y as a heading in the body frame


@dataclass(frozen=True)
class InRowConfig:
    cone_length: float = 3.0
    cone_angle_step: float = math.radians(1.0)
    cone_max_half_angle: float = math.radians(60.0)
    cone_point_threshold: int = 4
    cone_min_aperture: float = math.radians(4.0)
    side_rect_length: float = 2.0
    side_rect_growth_step: float = 0.05
    side_rect_max_width: float = 2.0
    side_rect_point_threshold: int = 5
    center_gain: float = 0.5
    lookahead: float = 1.0
    pid_gains: tuple[float, float, float] = (1.2, 0.0, 0.1)
    pid_integral_limit: float = 0.5
    v_max: float = 1.0
    omega_max: float = 1.5
    governor_rect_length: float = 2.0
    governor_rect_width: float = 0.6
    governor_stop_distance: float = 0.9  # beyond the sensor's minimum range, so a stop is never blind
    end_rect_length: float = 3.0
    end_rect_width: float = 3.0
    end_point_threshold: int = 5
    end_confirm_scans: int = 3
    exit_distance: float = 1.0
    exit_speed: float = 0.5
    control_period: float = 0.1

    def __post_init__(self):
        positive = ("cone_length", "cone_angle_step", "side_rect_length", "side_rect_growth_step",
                    "side_rect_max_width", "lookahead", "v_max", "omega_max", "governor_rect_length",
                    "governor_rect_width", "end_rect_length", "end_rect_width", "exit_distance",
                    "exit_speed", "control_period", "pid_integral_limit")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.cone_max_half_angle < math.pi / 2:
            raise ValueError("cone_max_half_angle must be in (0, pi/2)")
        for name in ("cone_point_threshold", "side_rect_point_threshold", "end_point_threshold",
                     "end_confirm_scans"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.governor_stop_distance < self.governor_rect_length:
            raise ValueError("governor_stop_distance must lie in [0, governor_rect_length)")
        if len(self.pid_gains) != 3:
            raise ValueError("pid_gains must be (kp, ki, kd)")

    @property
    def governor_rect(self) -> Rect2:
        h = self.governor_rect_length / 2
        return Rect2(Point2(0.0, h), FORWARD, h, self.governor_rect_width / 2)

    @property
    def end_rect(self) -> Rect2:
        h = self.end_rect_length / 2
        return Rect2(Point2(0.0, h), FORWARD, h, self.end_rect_width / 2)


@dataclass
class PIDState:
    integral: float = 0.0
    prev_error: float | None = None


@dataclass
class InRowState:
    pid: PIDState = field(default_factory=PIDState)
    last_t: float | None = None
    end_streak: int = 0  # consecutive scans with the end rectangle below threshold
    exit_start: Pose2 | None = None  # odometry pose when the row end latched
    row_ended: bool = False


@dataclass(frozen=True)
class InRowStatus:
    cone: Cone2
    left_distance: float
    right_distance: float
    offset: float
    steering_target: Point2
    commanded: Twist
    row_end_detected: bool
    row_ended: bool
    degraded: bool = False


def _forward_bearings(points: np.ndarray) -> np.ndarray:
    # atan2 is odd in its first argument, so mirrored scans give exactly negated bearings
    return np.arctan2(-points[:, 0], points[:, 1])


def _grow_half_angle(bearings: np.ndarray, cfg: InRowConfig) -> float:
    """Largest step angle whose sector holds fewer than the threshold points.

    ``bearings`` are non-negative angles from the axis of the points on one side.
    """
    thr = cfg.cone_point_threshold
    blocking = np.partition(bearings, thr - 1)[thr - 1] if len(bearings) >= thr else math.inf
    angle, k = 0.0, 0
    while angle < cfg.cone_max_half_angle:
        nxt = min((k + 1) * cfg.cone_angle_step, cfg.cone_max_half_angle)
        if nxt >= blocking:
            break
        angle, k = nxt, k + 1
    return angle


def find_cone(scan: Scan2D, cfg: InRowConfig) -> Cone2:
    """Grow each side of a forward cone until it would contain the threshold count.

    The two sides grow independently and count only the points of their
    own sector (points on the axis belong to both).
    """
    pts = scan.points
    near = pts[np.hypot(pts[:, 0], pts[:, 1]) <= cfg.cone_length]
    b = _forward_bearings(near)
    left = _grow_half_angle(b[b >= 0], cfg)
    right = _grow_half_angle(-b[b <= 0], cfg)
    return Cone2(Point2(0.0, 0.0), FORWARD, left, right, cfg.cone_length)


def cone_offset(cone: Cone2) -> float:
    return (cone.left_half_angle - cone.right_half_angle) / 2


def _grow_side(lateral: np.ndarray, cfg: InRowConfig) -> float:
    thr = cfg.side_rect_point_threshold
    blocking = np.partition(lateral, thr - 1)[thr - 1] if len(lateral) >= thr else math.inf
    k = 1
    while True:
        w = min(k * cfg.side_rect_growth_step, cfg.side_rect_max_width)
        if w >= blocking or w >= cfg.side_rect_max_width:
            return w
        k += 1


def side_distances(scan: Scan2D, cfg: InRowConfig) -> tuple[float, float]:
    """Lateral extent of the left and right growing rectangles."""
    pts = scan.points
    band = pts[np.abs(pts[:, 1]) <= cfg.side_rect_length / 2]
    left = _grow_side(-band[band[:, 0] < 0, 0], cfg)
    right = _grow_side(band[band[:, 0] > 0, 0], cfg)
    return left, right


def steering_offset(cone_off: float, left: float, right: float, cfg: InRowConfig) -> float:
    # (left - right) / 2 is how far right of the corridor center the robot sits
    off = cone_off + cfg.center_gain * (left - right) / 2
    lim = cfg.cone_max_half_angle
    return min(max(off, -lim), lim)


def steering_target(offset: float, lookahead: float) -> Point2:
    return Point2(-lookahead * math.sin(offset), lookahead * math.cos(offset))


def pid_step(error: float, state: PIDState, dt: float, gains, integral_limit: float = math.inf):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    kp, ki, kd = gains
    integral = min(max(state.integral + error * dt, -integral_limit), integral_limit)
    deriv = 0.0 if state.prev_error is None else (error - state.prev_error) / dt
    return kp * error + ki * integral + kd * deriv, PIDState(integral, error)


def govern_speed(scan: Scan2D, cfg: InRowConfig) -> float:
    pts = scan.points
    hw = cfg.governor_rect_width / 2
    inside = pts[(pts[:, 1] >= 0) & (pts[:, 1] <= cfg.governor_rect_length) & (np.abs(pts[:, 0]) <= hw)]
    if len(inside) == 0:
        return cfg.v_max
    d = float(np.min(np.hypot(inside[:, 0], inside[:, 1])))
    stop, full = cfg.governor_stop_distance, cfg.governor_rect_length
    if d <= stop:
        return 0.0
    return cfg.v_max * min(1.0, (d - stop) / (full - stop))


def count_in_end_rect(scan: Scan2D, cfg: InRowConfig) -> int:
    pts = scan.points
    hw = cfg.end_rect_width / 2
    return int(np.count_nonzero((pts[:, 1] >= 0) & (pts[:, 1] <= cfg.end_rect_length) & (np.abs(pts[:, 0]) <= hw)))


def detect_row_end(scan: Scan2D, cfg: InRowConfig) -> bool:
    return count_in_end_rect(scan, cfg) < cfg.end_point_threshold


def exit_travelled(start: Pose2, pose: Pose2) -> float:
    return math.hypot(pose.x - start.x, pose.y - start.y)


def in_row_step(scan: Scan2D, odom_pose: Pose2, state: InRowState, cfg: InRowConfig):
    """One control update. Returns ``(Twist, InRowStatus)`` and mutates ``state``.

    The row end latches after ``end_confirm_scans`` consecutive sparse end
    rectangles; from then on the command latches to straight driving
    until odometry reports ``exit_distance``; ``row_ended`` is then set.
    """
    dt = cfg.control_period if state.last_t is None else scan.timestamp - state.last_t
    if not dt > 0:
        dt = cfg.control_period
    state.last_t = scan.timestamp

    cone = find_cone(scan, cfg)
    c_off = cone_offset(cone)
    left, right = side_distances(scan, cfg)
    offset = steering_offset(c_off, left, right, cfg)
    target = steering_target(offset, cfg.lookahead)
    speed = govern_speed(scan, cfg)
    # no usable heading, or the governor holds the robot in front of an obstacle
    degraded = cone.left_half_angle + cone.right_half_angle < cfg.cone_min_aperture or speed == 0.0

    if state.exit_start is None:
        state.end_streak = state.end_streak + 1 if detect_row_end(scan, cfg) else 0
        if state.end_streak >= cfg.end_confirm_scans:
            state.exit_start = odom_pose
    if state.exit_start is not None:
        if exit_travelled(state.exit_start, odom_pose) >= cfg.exit_distance:
            state.row_ended = True
        cmd = Twist(0.0, 0.0 if state.row_ended else cfg.exit_speed, 0.0)
    else:
        bearing = math.atan2(-target.x, target.y)
        omega, state.pid = pid_step(bearing, state.pid, dt, cfg.pid_gains, cfg.pid_integral_limit)
        omega = min(max(omega, -cfg.omega_max), cfg.omega_max)
        cmd = Twist(0.0, speed, omega)
    status = InRowStatus(cone, left, right, offset, target, cmd,
                         state.exit_start is not None, state.row_ended, degraded)
    return cmd, status
