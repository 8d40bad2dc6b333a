"""Skid-steer kinematics and dead reckoning.

The kinematic matrix for an ideal symmetric skid-steer vehicle is

    [v_x, v_y, w]^T = alpha / (2 x_icr) * [[0, 0], [x_icr, x_icr], [-1, 1]] @ [V_l, V_r]^T

Its first row is zero, so the body frame's forward axis is +y and v_x is
always 0. Every controller in this package measures bearings from body +y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2

STRAIGHT_EPS = 1e-9


@dataclass(frozen=True)
class TreadSpeeds:
    v_left: float
    v_right: float


@dataclass(frozen=True)
class Twist:
    v_x: float = 0.0
    v_y: float = 0.0
    omega_z: float = 0.0

    @property
    def forward(self) -> float:
        return self.v_y


ZERO_TWIST = Twist()


@dataclass(frozen=True)
class KinematicParams:
    alpha: float = 1.0
    x_icr: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.x_icr == 0:
            raise ValueError("x_icr must be non-zero")


def tread_to_twist(treads: TreadSpeeds, params: KinematicParams) -> Twist:
    if params.x_icr == 0:
        raise ValueError("x_icr must be non-zero")
    k = params.alpha / (2.0 * params.x_icr)
    return Twist(
        0.0,
        k * params.x_icr * (treads.v_left + treads.v_right),
        k * (treads.v_right - treads.v_left),
    )


def twist_to_treads(twist: Twist, params: KinematicParams) -> TreadSpeeds:
    """Invert the (v_y, w) rows of the kinematic matrix; v_x is ignored."""
    s = twist.v_y / params.alpha  # (V_l + V_r) / 2
    d = twist.omega_z * params.x_icr / params.alpha  # (V_r - V_l) / 2
    return TreadSpeeds(s - d, s + d)


def integrate_pose(pose: Pose2, twist: Twist, dt: float) -> Pose2:
    """Exact constant-twist integration over ``dt`` (arc, or line when w ~ 0)."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    w = twist.omega_z
    th = pose.heading
    if abs(w) < STRAIGHT_EPS:
        # body-frame displacement (v_x dt, v_y dt)
        lx, ly = twist.v_x * dt, twist.v_y * dt
    else:
        dth = w * dt
        s, c1 = math.sin(dth), 1.0 - math.cos(dth)
        lx = (twist.v_x * s - twist.v_y * c1) / w
        ly = (twist.v_y * s + twist.v_x * c1) / w
    c, s = math.cos(th), math.sin(th)
    return Pose2(pose.x + c * lx - s * ly, pose.y + s * lx + c * ly, th + w * dt)
