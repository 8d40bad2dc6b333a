"""Batch experiments: seeded missions per vegetative stage and headland
pole-detection scenes. Used by the acceptance tests and ``scripts/``."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .end_row import POLICIES, EndRowConfig, detect_end_points, select_row_ends
from .evaluation import center_displacement, corridor_width_stats, detection_errors
from .geometry import Pose2, points_from_frame
from .runner import run_mission, to_run_log
from .scan import FilterConfig, Scan2D, filter_scan, quantize, to_points
from .simulator import STAGE_DENSITY, SensorConfig, World, WorldConfig, generate_world, raycast_scan
from .turn import LEFT

STAGES = tuple(STAGE_DENSITY)


@dataclass
class MissionSummary:
    stage: str
    seed: int
    slip: float
    outcome: str
    fault_reason: str | None
    collisions: int
    displacement: tuple[float, float] | None  # mean, max
    width: tuple[float, float, float] | None  # mean, max, min
    phases: list


def mission(cfg: RunConfig, stage: str, seed: int, slip: float = 0.0) -> MissionSummary:
    cfg = cfg.with_seed(seed)
    cfg = replace(cfg, world=replace(cfg.world, vegetative_stage=stage),
                  dynamics=replace(cfg.dynamics, slip_factor=slip))
    res = run_mission(cfg, keep_scans=False)
    log = to_run_log(res)
    try:
        disp = center_displacement(log)
        width = corridor_width_stats(log)
    except ValueError:
        disp = width = None
    return MissionSummary(stage, seed, slip, res.outcome, res.fault_reason, res.collisions, disp, width,
                          res.phases)


def mission_batch(cfg: RunConfig | None = None, stages=STAGES, seeds=range(5), slip: float = 0.0):
    cfg = cfg or RunConfig()
    return [mission(cfg, st, s, slip) for st in stages for s in seeds]


# -- headland pole-detection scenes -----------------------------------------

def headland_pose(world: World, rng: np.random.Generator, standoff: float = 1.5) -> Pose2:
    """Robot beyond the far row ends, driving along the headland (+y) with the
    row ends on its left, at a random position between the first and last row."""
    y = rng.uniform(world.row_y[0], world.row_y[-1])
    return Pose2(world.config.row_length + standoff, float(y), 0.0)


def end_row_scene(seed: int, noise: float = 0.02, stage: str = "medium",
                  world_cfg: WorldConfig | None = None, sensor: SensorConfig | None = None,
                  filt: FilterConfig | None = None) -> tuple[World, Pose2, Scan2D]:
    wc = replace(world_cfg or WorldConfig(), seed=seed, vegetative_stage=stage)
    world = generate_world(wc)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    pose = headland_pose(world, rng)
    sensor = replace(sensor or SensorConfig(), range_noise_sigma=noise)
    scan = quantize(filter_scan(to_points(raycast_scan(world, pose, sensor, rng)), filt or FilterConfig()))
    return world, pose, scan


def scene_errors(world: World, pose: Pose2, scan: Scan2D, cfg: EndRowConfig) -> dict[str, np.ndarray]:
    """Per-policy distance from each selected row-end point to the nearest end pole."""
    out = {}
    for policy in POLICIES:
        ends = select_row_ends(detect_end_points(scan, cfg, policy), LEFT, cfg)
        if not ends:
            out[policy] = np.empty(0)
            continue
        w = points_from_frame(np.array([e.position for e in ends]), pose)
        out[policy] = detection_errors(w, world.end_poles)
    return out


def pole_detection_study(n_scenes: int = 100, noise: float = 0.02, stage: str = "medium",
                         cfg: EndRowConfig | None = None, outlier: float = 1.0) -> dict:
    """Mean/max/min error per policy over ``n_scenes`` seeded headland scenes.

    Errors above ``outlier`` metres (a vegetation cluster taken for a row end)
    are counted separately and left out of the statistics.
    """
    cfg = cfg or EndRowConfig()
    errs = {p: [] for p in POLICIES}
    for seed in range(n_scenes):
        world, pose, scan = end_row_scene(seed, noise, stage)
        for policy, e in scene_errors(world, pose, scan, replace(cfg, rng_seed=seed)).items():
            errs[policy].append(e)
    report = {}
    for policy, chunks in errs.items():
        e = np.concatenate(chunks) if chunks else np.empty(0)
        inl = e[e <= outlier]
        report[policy] = {
            "mean": float(inl.mean()) if inl.size else math.nan,
            "max": float(inl.max()) if inl.size else math.nan,
            "min": float(inl.min()) if inl.size else math.nan,
            "count": int(inl.size),
            "outliers": int(e.size - inl.size),
        }
    return report
