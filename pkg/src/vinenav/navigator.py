"""Mission state machine: in-row, exit, turn, re-align, headland, turn, in-row."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .end_row import EndRowConfig, EndRowState, detect_end_points, end_row_step, goal_reached, select_row_ends
from .geometry import Point2, Pose2
from .in_row import InRowConfig, InRowState, InRowStatus, exit_travelled, in_row_step
from .odometry import ZERO_TWIST, Twist, integrate_pose
from .scan import Scan2D
from .turn import TurnConfig, align_to_end_row, other, turn_step


class Phase(str, Enum):
    IN_ROW = "InRow"
    EXIT_STRAIGHT = "ExitStraight"
    TURN_OUT = "TurnOut"
    ALIGN_HEADLAND = "AlignHeadland"
    END_ROW = "EndRow"
    TURN_IN = "TurnIn"
    DONE = "Done"
    FAULT = "Fault"


TERMINAL = (Phase.DONE, Phase.FAULT)


@dataclass(frozen=True)
class NavConfig:
    in_row: InRowConfig = field(default_factory=InRowConfig)
    turn: TurnConfig = field(default_factory=TurnConfig)
    end_row: EndRowConfig = field(default_factory=EndRowConfig)
    corridors: int = 3
    degraded_timeout: float = 1.5

    def __post_init__(self):
        if self.corridors < 1:
            raise ValueError("corridors must be >= 1")
        if not self.degraded_timeout > 0:
            raise ValueError("degraded_timeout must be > 0")


@dataclass
class NavState:
    phase: Phase = Phase.IN_ROW
    t: float = 0.0
    odom_pose: Pose2 = field(default_factory=Pose2)
    phase_entry_pose: Pose2 = field(default_factory=Pose2)
    corridor_index: int = 0
    direction: str = "left"
    command: Twist = ZERO_TWIST
    heading_accum: float = 0.0
    align_correction: float | None = None
    degraded_since: float | None = None
    fault_reason: str | None = None
    in_row: InRowState = field(default_factory=InRowState)
    end_row: EndRowState = field(default_factory=EndRowState)
    last_in_row: InRowStatus | None = None
    events: list = field(default_factory=list)


def initial_state(cfg: NavConfig) -> NavState:
    return NavState(direction=cfg.turn.direction_first)


def _enter(state: NavState, phase: Phase, reason: str = "") -> None:
    state.events.append({"t": state.t, "type": "phase", "from": state.phase.value, "to": phase.value,
                         "reason": reason, "corridor": state.corridor_index})
    state.phase = phase
    state.phase_entry_pose = state.odom_pose
    state.heading_accum = 0.0


def _degraded(state: NavState, flag: bool, cfg: NavConfig, reason: str) -> bool:
    if not flag:
        state.degraded_since = None
        return False
    if state.degraded_since is None:
        state.degraded_since = state.t
    if state.t - state.degraded_since >= cfg.degraded_timeout:
        state.fault_reason = f"degraded perception: {reason}"
        _enter(state, Phase.FAULT, state.fault_reason)
        return True
    return False


def _alignment(scan: Scan2D, state: NavState, cfg: NavConfig) -> float | None:
    ends = [e.position for e in select_row_ends(detect_end_points(scan, cfg.end_row), state.direction, cfg.end_row)]
    front = [p for p in ends if p.y > 0]
    back = [p for p in ends if p.y < 0]
    if not front or not back:
        return None
    f = min(front, key=lambda p: math.hypot(*p))
    b = min(back, key=lambda p: math.hypot(*p))
    return align_to_end_row(f, b, cfg.turn)


def _entry_alignment(scan: Scan2D, cfg: NavConfig) -> float | None:
    """Correction that points body-forward square to the corridor mouth, from
    the nearest row ends ahead on either side."""
    ends = [e.position for e in detect_end_points(scan, cfg.end_row) if e.position.y > 0]
    left = [p for p in ends if p.x < 0]
    right = [p for p in ends if p.x > 0]
    if not left or not right:
        return None
    lp = min(left, key=lambda p: math.hypot(*p))
    rp = min(right, key=lambda p: math.hypot(*p))
    # forward is the left->right direction rotated a quarter turn counter-clockwise
    dx, dy = rp.x - lp.x, rp.y - lp.y
    return align_to_end_row(Point2(-dy, dx), Point2(0.0, 0.0), cfg.turn)


def nav_step(scan: Scan2D | None, odom: Twist, dt: float, state: NavState, cfg: NavConfig) -> tuple[Twist, NavState]:
    """Advance the mission by one odometry tick; ``scan`` is given on sensor ticks only."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    state.t = scan.timestamp if scan is not None else state.t + dt
    state.odom_pose = integrate_pose(state.odom_pose, odom, dt)
    state.heading_accum += odom.omega_z * dt

    if state.phase is Phase.IN_ROW and scan is not None:
        cmd, status = in_row_step(scan, state.odom_pose, state.in_row, cfg.in_row)
        state.last_in_row = status
        state.command = cmd
        if _degraded(state, status.degraded, cfg, "no free path ahead"):
            pass
        elif status.row_end_detected:
            if state.corridor_index >= cfg.corridors - 1:
                _enter(state, Phase.DONE, "last corridor finished")
            else:
                _enter(state, Phase.EXIT_STRAIGHT, "row end detected")
                state.phase_entry_pose = state.in_row.exit_start

    if state.phase is Phase.EXIT_STRAIGHT:
        if exit_travelled(state.phase_entry_pose, state.odom_pose) >= cfg.in_row.exit_distance:
            _enter(state, Phase.TURN_OUT, "exit distance reached")
            state.events.append({"t": state.t, "type": "turn", "event": "start", "direction": state.direction})
        else:
            state.command = Twist(0.0, cfg.in_row.exit_speed, 0.0)

    if state.phase is Phase.TURN_OUT:
        state.command, done = turn_step(state.heading_accum, cfg.turn, state.direction)
        if done:
            state.events.append({"t": state.t, "type": "turn", "event": "open_loop_done",
                                 "odom_angle": state.heading_accum})
            _enter(state, Phase.ALIGN_HEADLAND, "turn done")
            state.align_correction = None

    if state.phase is Phase.ALIGN_HEADLAND:
        if state.align_correction is None:
            state.command = ZERO_TWIST
            if scan is not None:
                corr = _alignment(scan, state, cfg)
                if corr is None or abs(corr) <= cfg.turn.alignment_tolerance:
                    state.events.append({"t": state.t, "type": "turn", "event": "correction",
                                         "available": corr is not None, "correction": corr, "applied": False})
                    _start_end_row(state, cfg, "alignment not needed" if corr is not None else "alignment unavailable")
                else:
                    state.align_correction = corr
                    state.heading_accum = 0.0
        if state.phase is Phase.ALIGN_HEADLAND and state.align_correction is not None:
            state.command, done = turn_step(state.heading_accum, cfg.turn, "left", state.align_correction)
            if done:
                state.events.append({"t": state.t, "type": "turn", "event": "correction", "available": True,
                                     "correction": state.align_correction, "applied": True})
                _start_end_row(state, cfg, "correction applied")

    if state.phase is Phase.END_ROW:
        if goal_reached(state.end_row, state.odom_pose):
            state.end_row.arrived = True
        if scan is not None and not state.end_row.arrived:
            state.command, _, _ = end_row_step(scan, state.odom_pose, state.end_row, cfg.end_row)
            last = state.end_row.last_good_t
            if last is not None and state.t - last >= cfg.degraded_timeout:
                state.fault_reason = "degraded perception: no row ends visible"
                _enter(state, Phase.FAULT, state.fault_reason)
        if state.phase is Phase.END_ROW and state.end_row.arrived:
            _enter(state, Phase.TURN_IN, "corridor reached")
            state.align_correction = None
            state.events.append({"t": state.t, "type": "turn", "event": "start", "direction": state.direction})

    if state.phase is Phase.TURN_IN:
        if state.align_correction is None:
            state.command, done = turn_step(state.heading_accum, cfg.turn, state.direction)
            if done:
                state.events.append({"t": state.t, "type": "turn", "event": "open_loop_done",
                                     "odom_angle": state.heading_accum})
                state.align_correction = math.nan  # waiting for a scan
                state.heading_accum = 0.0
        elif math.isnan(state.align_correction):
            state.command = ZERO_TWIST
            if scan is not None:
                corr = _entry_alignment(scan, cfg)
                if corr is None or abs(corr) <= cfg.turn.alignment_tolerance:
                    state.events.append({"t": state.t, "type": "turn", "event": "correction",
                                         "available": corr is not None, "correction": corr, "applied": False})
                    _start_in_row(state)
                else:
                    state.align_correction = corr
                    state.heading_accum = 0.0
        if state.phase is Phase.TURN_IN and state.align_correction is not None \
                and not math.isnan(state.align_correction):
            state.command, done = turn_step(state.heading_accum, cfg.turn, "left", state.align_correction)
            if done:
                state.events.append({"t": state.t, "type": "turn", "event": "correction", "available": True,
                                     "correction": state.align_correction, "applied": True})
                _start_in_row(state)

    if state.phase in TERMINAL:
        state.command = ZERO_TWIST
    return state.command, state


def _start_end_row(state: NavState, cfg: NavConfig, reason: str) -> None:
    state.end_row = EndRowState(side=state.direction)
    state.end_row.last_good_t = state.t
    _enter(state, Phase.END_ROW, reason)


def _start_in_row(state: NavState) -> None:
    state.corridor_index += 1
    state.direction = other(state.direction)
    state.in_row = InRowState()
    state.degraded_since = None
    state.align_correction = None
    _enter(state, Phase.IN_ROW, "turn done")
