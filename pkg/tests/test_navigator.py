import math
import re
from dataclasses import replace

import numpy as np
import pytest

from vinenav.config import RunConfig
from vinenav.geometry import Pose2, compose
from vinenav.navigator import NavConfig, Phase, initial_state, nav_step
from vinenav.odometry import ZERO_TWIST, Twist
from vinenav.runner import replay, run_mission, start_pose
from vinenav.scan import Scan2D

from conftest import blocked_world, wall_scan

CFG = NavConfig()
DT = 0.02
SUCCESS = re.compile(r"InRow( ExitStraight TurnOut AlignHeadland EndRow TurnIn InRow)* Done")


def drive(state, scans, odom, cfg=CFG, ticks_per_scan=5):
    """Feed one scan per ``ticks_per_scan`` odometry ticks; returns the commands."""
    cmds = []
    for k, scan in enumerate(scans):
        for j in range(ticks_per_scan):
            cmd, state = nav_step(scan if j == 0 else None, odom, DT, state, cfg)
            cmds.append(cmd)
    return cmds


def test_row_end_leads_to_exit_then_turn():
    state = initial_state(CFG)
    fwd = Twist(0.0, 0.5, 0.0)
    drive(state, [wall_scan(t=0.1 * k) for k in range(3)], fwd)
    assert state.phase is Phase.IN_ROW
    drive(state, [Scan2D(0.3 + 0.1 * k) for k in range(3)], fwd)
    assert state.phase is Phase.EXIT_STRAIGHT
    assert state.command == Twist(0.0, CFG.in_row.exit_speed, 0.0)
    # 1.0 m at 0.5 m/s from the latch pose
    drive(state, [None] * 19, fwd)
    assert state.phase is Phase.EXIT_STRAIGHT
    drive(state, [None] * 2, fwd)
    assert state.phase is Phase.TURN_OUT
    assert state.command.omega_z == CFG.turn.omega_turn


def test_last_corridor_ends_in_done():
    cfg = replace(CFG, corridors=1)
    state = initial_state(cfg)
    cmds = drive(state, [Scan2D(0.1 * k) for k in range(4)], Twist(0.0, 0.5, 0.0), cfg)
    assert state.phase is Phase.DONE
    assert cmds[-1] == ZERO_TWIST
    assert drive(state, [wall_scan()], Twist(0.0, 0.5, 0.0), cfg)[-1] == ZERO_TWIST


def test_turn_out_then_align_without_ends():
    state = initial_state(CFG)
    state.phase = Phase.TURN_OUT
    spin = Twist(0.0, 0.0, CFG.turn.omega_turn)
    n = math.ceil(CFG.turn.turn_angle / (CFG.turn.omega_turn * DT))
    for _ in range(n):
        nav_step(None, spin, DT, state, CFG)
    assert state.phase is Phase.ALIGN_HEADLAND
    nav_step(Scan2D(1.0), ZERO_TWIST, DT, state, CFG)
    assert state.phase is Phase.END_ROW
    assert state.events[-1]["reason"] == "alignment unavailable"


def test_end_row_arrival_starts_turn_in():
    state = initial_state(CFG)
    state.phase = Phase.END_ROW
    state.end_row.arrived = True
    cmd, state = nav_step(Scan2D(0.0), ZERO_TWIST, DT, state, CFG)
    assert state.phase is Phase.TURN_IN
    assert cmd.omega_z == CFG.turn.omega_turn


def test_blocked_path_faults_after_timeout():
    state = initial_state(CFG)
    wall = Scan2D(0.0, [[x, 0.85] for x in np.arange(-1.0, 1.0, 0.05)])
    k = 0
    while state.phase is Phase.IN_ROW and k < 100:
        nav_step(Scan2D(0.1 * k, wall.points), ZERO_TWIST, 0.1, state, CFG)
        k += 1
    assert state.phase is Phase.FAULT
    assert "degraded perception" in state.fault_reason
    assert k * 0.1 == pytest.approx(CFG.degraded_timeout + 0.1, abs=0.11)
    assert nav_step(Scan2D(0.1 * k, wall.points), ZERO_TWIST, 0.1, state, CFG)[0] == ZERO_TWIST


def test_rejects_bad_dt():
    with pytest.raises(ValueError):
        nav_step(None, ZERO_TWIST, 0.0, initial_state(CFG), CFG)


# -- full missions ----------------------------------------------------------

def test_full_run_phase_sequence(default_run):
    assert default_run.outcome == "Done"
    assert SUCCESS.fullmatch(" ".join(default_run.phases))
    assert default_run.phases.count("TurnIn") == 2
    assert default_run.collisions == 0


def test_terminal_phase_commands_are_zero(default_run):
    terminal = [c for c in default_run.commands if c[1] in ("Done", "Fault")]
    assert terminal and all(c[2] == 0.0 and c[3] == 0.0 for c in terminal)


def test_zero_order_hold_between_scans(default_run):
    # scan-driven phases only change their command on a scan tick
    cmds = default_run.commands
    for k in range(1, len(cmds)):
        if k % 5 and cmds[k][1] == cmds[k - 1][1] and cmds[k][1] in ("InRow", "EndRow"):
            assert cmds[k][2:] == cmds[k - 1][2:]


def test_turn_events_logged(default_run):
    turns = [e for e in default_run.events if e["type"] == "turn"]
    assert sum(e["event"] == "open_loop_done" for e in turns) == 4
    assert all(np.isfinite(e["t"]) for e in turns)


def test_replay_reproduces_commands(default_run):
    assert replay(default_run.scans, default_run.config) == default_run.commands


def test_truth_matches_odometry_without_slip(default_run):
    start = start_pose(default_run.world, default_run.config)
    for (t, x, y, h), (_, ox, oy, oh) in zip(default_run.trajectory, default_run.odometry):
        p = compose(start, Pose2(ox, oy, oh))
        assert math.hypot(p.x - x, p.y - y) < 1e-9


def test_blocked_corridor_faults():
    cfg = replace(RunConfig(), max_time=120.0)
    res = run_mission(cfg, blocked_world(cfg), keep_scans=False)
    assert res.outcome == "Fault"
    assert res.fault_reason.startswith("degraded perception")
    assert res.collisions == 0
