"""Closed-loop simulation in lockstep with the navigator, plus offline replay."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .geometry import Pose2, points_from_frame
from .navigator import TERMINAL, NavState, Phase, initial_state, nav_step
from .odometry import ZERO_TWIST, Twist, tread_to_twist, twist_to_treads
from .scan import Scan2D, filter_scan, quantize, to_points
from .simulator import World, clamp_twist, generate_world, raycast_scan, step_dynamics


@dataclass
class RunResult:
    config: RunConfig
    world: World
    outcome: str = "running"
    fault_reason: str | None = None
    trajectory: list = field(default_factory=list)  # (t, x, y, heading)
    odometry: list = field(default_factory=list)  # (t, x, y, heading)
    commands: list = field(default_factory=list)  # (t, phase, v, omega)
    in_row: list = field(default_factory=list)  # dicts
    events: list = field(default_factory=list)  # dicts
    scans: list = field(default_factory=list)
    collisions: int = 0
    phases: list = field(default_factory=list)


def start_pose(world: World, cfg: RunConfig) -> Pose2:
    # body +y points along world +x when heading is -pi/2
    return Pose2(-cfg.start_offset, float(world.corridor_centers[0]), -math.pi / 2)


def ticks_per_scan(cfg: RunConfig) -> int:
    return max(1, round(cfg.dynamics.odom_rate / cfg.sensor.rate))


def executed_twist(cmd: Twist, cfg: RunConfig) -> tuple[Twist, Twist]:
    """(clamped command, tread-encoder odometry twist) for a controller command."""
    tw = clamp_twist(cmd, cfg.dynamics)
    return tw, tread_to_twist(twist_to_treads(tw, cfg.kinematics), cfg.kinematics)


def _in_row_record(t: float, truth: Pose2 | None, nav: NavState) -> dict:
    s = nav.last_in_row
    rec = {"t": t}
    if truth is not None:
        rec.update(x=truth.x, y=truth.y, heading=truth.heading)
    rec.update(odom_x=nav.odom_pose.x, odom_y=nav.odom_pose.y, odom_heading=nav.odom_pose.heading,
               left=s.left_distance, right=s.right_distance,
               cone_left=s.cone.left_half_angle, cone_right=s.cone.right_half_angle,
               offset=s.offset, v=s.commanded.v_y, omega=s.commanded.omega_z,
               row_ended=int(s.row_end_detected))
    return rec


def _end_row_record(t: float, truth: Pose2 | None, nav: NavState) -> dict:
    er = nav.end_row
    rec = {"t": t, "type": "end_row", "cluster_count": er.cluster_count, "passed_count": er.passed_count,
           "side": er.side, "end_points": []}
    for policy, eps in er.last_detections.items():
        for ep in eps:
            item = {"policy": policy, "x": ep.position.x, "y": ep.position.y}
            if truth is not None:
                w = points_from_frame(np.array([ep.position]), truth)[0]
                item.update(wx=float(w[0]), wy=float(w[1]))
            rec["end_points"].append(item)
    seg = er.last_segment
    rec["segment"] = None if seg is None else [list(seg.a), list(seg.b)]
    return rec


def _log_tick(res: RunResult, t: float, scan, truth: Pose2 | None, nav: NavState, before: Phase,
              prev_status, n_events: int) -> None:
    for ev in nav.events[n_events:]:
        ev = dict(ev)
        ev["t"] = t
        res.events.append(ev)
        if ev["type"] == "phase":
            res.phases.append(ev["to"])
    if scan is None:
        return
    if before is Phase.IN_ROW and nav.last_in_row is not prev_status:
        res.in_row.append(_in_row_record(t, truth, nav))
    if before is Phase.END_ROW and nav.end_row.last_good_t == scan.timestamp:
        res.events.append(_end_row_record(t, truth, nav))


def run_mission(cfg: RunConfig, world: World | None = None, keep_scans: bool = True) -> RunResult:
    world = world if world is not None else generate_world(cfg.world)
    res = RunResult(cfg, world)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    nav_cfg = cfg.nav
    nav = initial_state(nav_cfg)
    res.phases.append(nav.phase.value)
    truth = start_pose(world, cfg)
    odom = ZERO_TWIST
    dt = 1.0 / cfg.dynamics.odom_rate
    every = ticks_per_scan(cfg)
    in_collision = False
    k = 0
    while True:
        t = k * dt
        scan = None
        if k % every == 0:
            raw = raycast_scan(world, truth, cfg.sensor, rng, t)
            scan = quantize(filter_scan(to_points(raw), cfg.filter))
            if keep_scans:
                res.scans.append(scan)
        before, prev_status, n_ev = nav.phase, nav.last_in_row, len(nav.events)
        cmd, nav = nav_step(scan, odom, dt, nav, nav_cfg)
        _log_tick(res, t, scan, truth, nav, before, prev_status, n_ev)
        res.trajectory.append((t, truth.x, truth.y, truth.heading))
        res.odometry.append((t, nav.odom_pose.x, nav.odom_pose.y, nav.odom_pose.heading))
        tw, odom = executed_twist(cmd, cfg)
        res.commands.append((t, nav.phase.value, tw.v_y, tw.omega_z))

        hit = world.clearance(truth.x, truth.y) < cfg.dynamics.footprint_radius
        if hit and not in_collision:
            res.collisions += 1
            res.events.append({"t": t, "type": "collision", "x": truth.x, "y": truth.y})
        in_collision = hit

        if nav.phase in TERMINAL:
            res.outcome = nav.phase.value
            res.fault_reason = nav.fault_reason
            break
        if (k + 1) % every == 0 and (k + 1) * dt >= cfg.max_time:
            res.outcome = Phase.FAULT.value
            res.fault_reason = "mission time limit reached"
            res.events.append({"t": t, "type": "phase", "from": nav.phase.value, "to": "Fault",
                               "reason": res.fault_reason, "corridor": nav.corridor_index})
            res.phases.append("Fault")
            break
        truth = step_dynamics(truth, twist_to_treads(tw, cfg.kinematics), cfg.dynamics, cfg.kinematics, dt)
        k += 1
    return res


def replay(scans, cfg: RunConfig) -> list:
    """Drive the navigator from logged scans, closing the odometry loop on its
    own commands. Returns ``(t, phase, v, omega)`` rows like a live run."""
    scans = list(scans)
    if not scans:
        return []
    dt = 1.0 / cfg.dynamics.odom_rate
    by_tick = {round(s.timestamp / dt): s for s in scans}
    last_tick = max(by_tick) + ticks_per_scan(cfg) - 1
    nav_cfg = cfg.nav
    nav = initial_state(nav_cfg)
    odom = ZERO_TWIST
    rows = []
    for k in range(last_tick + 1):
        t = k * dt
        cmd, nav = nav_step(by_tick.get(k), odom, dt, nav, nav_cfg)
        tw, odom = executed_twist(cmd, cfg)
        rows.append((t, nav.phase.value, tw.v_y, tw.omega_z))
        if nav.phase in TERMINAL:
            break
    return rows


def to_run_log(res: RunResult):
    from .evaluation import RunLog

    traj = np.array(res.trajectory, dtype=float).reshape(-1, 4)
    end_row = [e for e in res.events if e.get("type") == "end_row"]
    return RunLog(traj, res.in_row, end_row, res.world)
