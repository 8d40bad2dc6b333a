"""In-place rotation at the row exit and the re-alignment against row ends."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .odometry import ZERO_TWIST, Twist

LEFT, RIGHT = "left", "right"


@dataclass(frozen=True)
class TurnConfig:
    turn_angle: float = math.pi / 2
    direction_first: str = LEFT
    omega_turn: float = 0.8
    alignment_tolerance: float = math.radians(2.0)

    def __post_init__(self):
        if not 0 < self.turn_angle <= math.pi:
            raise ValueError("turn_angle must be in (0, pi]")
        if self.direction_first not in (LEFT, RIGHT):
            raise ValueError("direction_first must be 'left' or 'right'")
        if not self.omega_turn > 0:
            raise ValueError("omega_turn must be > 0")
        if not self.alignment_tolerance >= 0:
            raise ValueError("alignment_tolerance must be >= 0")


def other(direction: str) -> str:
    return RIGHT if direction == LEFT else LEFT


def direction_sign(direction: str) -> float:
    return 1.0 if direction == LEFT else -1.0


def turn_step(odom_heading_delta: float, cfg: TurnConfig, direction: str | None = None,
              angle: float | None = None) -> tuple[Twist, bool]:
    """Rotate in place until the accumulated heading change reaches ``angle``.

    ``angle`` defaults to ``cfg.turn_angle``; a negative ``angle`` turns the
    opposite way, as used for re-alignment corrections.
    """
    target = cfg.turn_angle if angle is None else angle
    sign = direction_sign(direction or cfg.direction_first)
    if target < 0:
        sign, target = -sign, -target
    if abs(odom_heading_delta) >= target:
        return ZERO_TWIST, True
    return Twist(0.0, 0.0, sign * cfg.omega_turn), False


def align_to_end_row(front_point, back_point, cfg: TurnConfig | None = None) -> float:
    """Heading change (counter-clockwise positive) that makes body +y parallel
    to the segment from ``back_point`` to ``front_point``."""
    dx, dy = front_point[0] - back_point[0], front_point[1] - back_point[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("front and back end points coincide")
    # bearing of (dx, dy) measured from +y, positive toward -x (left)
    return math.atan2(-dx, dy)
