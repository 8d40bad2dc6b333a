"""Deterministic 2D vineyard world, skid-steer dynamics and a raycast LiDAR."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Pose2
from .odometry import KinematicParams, TreadSpeeds, Twist, integrate_pose, tread_to_twist
from .scan import NO_RETURN, RawScan

STAGE_DENSITY = {"low": 0.4, "medium": 1.0, "high": 1.8}


@dataclass(frozen=True)
class WorldConfig:
    n_rows: int = 4
    row_length: float = 36.0
    row_spacing: float = 2.0
    pole_spacing: float = 6.0
    pole_radius: float = 0.05
    vegetative_stage: str = "medium"
    vegetation_density: float = 8.0
    vegetation_radius: float = 0.04
    vegetation_protrusion_sigma: float = 0.25
    vegetation_max_protrusion: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 2:
            raise ValueError("n_rows must be >= 2")
        for name in ("row_length", "row_spacing", "pole_spacing", "pole_radius", "vegetation_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.vegetative_stage not in STAGE_DENSITY:
            raise ValueError(f"vegetative_stage must be one of {sorted(STAGE_DENSITY)}")
        if self.vegetation_density < 0 or self.vegetation_protrusion_sigma < 0 or self.vegetation_max_protrusion < 0:
            raise ValueError("vegetation parameters must be >= 0")


@dataclass(frozen=True)
class SensorConfig:
    rate: float = 10.0
    beams: int = 1024
    max_range: float = 30.0
    min_range: float = 0.8
    range_noise_sigma: float = 0.01
    dropout_probability: float = 0.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be > 0")
        if self.beams < 16:
            raise ValueError("beams must be >= 16")
        if not 0 <= self.min_range < self.max_range:
            raise ValueError("require 0 <= min_range < max_range")
        if self.range_noise_sigma < 0 or not 0 <= self.dropout_probability < 1:
            raise ValueError("noise parameters out of range")


@dataclass(frozen=True)
class DynamicsConfig:
    odom_rate: float = 50.0
    slip_factor: float = 0.0
    v_limit: float = 2.0
    omega_limit: float = 2.0
    footprint_radius: float = 0.25

    def __post_init__(self):
        if not (self.odom_rate > 0 and self.v_limit > 0 and self.omega_limit > 0):
            raise ValueError("rates and limits must be > 0")
        if not 0 <= self.slip_factor < 1:
            raise ValueError("slip_factor must be in [0, 1)")


@dataclass
class World:
    config: WorldConfig
    row_y: np.ndarray  # (n_rows,) row line ordinates; rows run along +x from 0 to row_length
    poles: list[np.ndarray]  # per row, (k, 2) pole centers ordered by x
    vegetation: np.ndarray  # (m, 2) centers
    vegetation_row: np.ndarray  # (m,) row index of each vegetation point

    def __post_init__(self):
        self._obstacles = None
        self._tree = None

    @property
    def obstacles(self) -> tuple[np.ndarray, np.ndarray]:
        """All circles as (centers, radii)."""
        if self._obstacles is None:
            poles = np.vstack(self.poles)
            centers = np.vstack((poles, self.vegetation))
            radii = np.concatenate((np.full(len(poles), self.config.pole_radius),
                                    np.full(len(self.vegetation), self.config.vegetation_radius)))
            self._obstacles = (centers, radii)
        return self._obstacles

    @property
    def end_poles(self) -> np.ndarray:
        return np.vstack([np.vstack((p[0], p[-1])) for p in self.poles])

    @property
    def corridor_centers(self) -> np.ndarray:
        return (self.row_y[:-1] + self.row_y[1:]) / 2

    def clearance(self, x: float, y: float) -> float:
        """Distance from (x, y) to the nearest obstacle surface."""
        centers, radii = self.obstacles
        if self._tree is None:
            self._tree = cKDTree(centers)
        idx = self._tree.query_ball_point((x, y), 1.0)
        if not idx:
            d, i = self._tree.query((x, y))
            return float(d - radii[i])
        idx = np.asarray(idx)
        return float(np.min(np.hypot(centers[idx, 0] - x, centers[idx, 1] - y) - radii[idx]))

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "row_y": self.row_y.tolist(),
            "poles": [p.tolist() for p in self.poles],
            "vegetation": self.vegetation.tolist(),
            "vegetation_row": self.vegetation_row.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "World":
        return cls(
            WorldConfig(**d["config"]),
            np.asarray(d["row_y"], dtype=float),
            [np.asarray(p, dtype=float).reshape(-1, 2) for p in d["poles"]],
            np.asarray(d["vegetation"], dtype=float).reshape(-1, 2),
            np.asarray(d["vegetation_row"], dtype=int),
        )


def generate_world(cfg: WorldConfig) -> World:
    rng = np.random.default_rng(cfg.seed)
    row_y = np.arange(cfg.n_rows) * cfg.row_spacing
    n_gaps = max(1, math.ceil(cfg.row_length / cfg.pole_spacing - 1e-9))
    pole_x = np.linspace(0.0, cfg.row_length, n_gaps + 1)
    poles = [np.column_stack((pole_x, np.full_like(pole_x, y))) for y in row_y]

    density = cfg.vegetation_density * STAGE_DENSITY[cfg.vegetative_stage]
    veg, rows = [], []
    for i, y in enumerate(row_y):
        # stratified along the row: one plant per equal bin, jittered inside it
        n = int(round(density * cfg.row_length))
        x = (np.arange(n) + rng.uniform(0.0, 1.0, n)) * (cfg.row_length / max(n, 1))
        off = rng.normal(0.0, cfg.vegetation_protrusion_sigma, n)
        off = np.clip(off, -cfg.vegetation_max_protrusion, cfg.vegetation_max_protrusion)
        veg.append(np.column_stack((x, y + off)))
        rows.append(np.full(n, i))
    return World(cfg, row_y, poles, np.vstack(veg), np.concatenate(rows))


def save_world(world: World, path) -> None:
    with open(path, "w") as fh:
        json.dump(world.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_world(path) -> World:
    with open(path) as fh:
        return World.from_dict(json.load(fh))


def beam_bearings(beams: int) -> np.ndarray:
    return -math.pi + np.arange(beams) * (2 * math.pi / beams)


def raycast_ranges(centers: np.ndarray, radii: np.ndarray, pose: Pose2, beams: int, max_range: float) -> np.ndarray:
    """Noise-free first-hit range per beam (inf for no hit within ``max_range``).

    Only (beam, circle) pairs whose bearing falls inside the circle's angular
    extent are evaluated.
    """
    out = np.full(beams, np.inf)
    d = centers - (pose.x, pose.y)
    dist = np.hypot(d[:, 0], d[:, 1])
    keep = (dist - radii <= max_range) & (dist > radii)
    if not keep.any():
        return out
    d, dist, r = d[keep], dist[keep], radii[keep]
    step = 2 * math.pi / beams
    center_bearing = np.arctan2(d[:, 1], d[:, 0]) - pose.heading
    half = np.arcsin(r / dist)
    lo = np.ceil((center_bearing - half + math.pi) / step).astype(np.int64)
    hi = np.floor((center_bearing + half + math.pi) / step).astype(np.int64)
    n = hi - lo + 1
    has = n > 0
    if not has.any():
        return out
    lo, n = lo[has], n[has]
    circ = np.repeat(np.flatnonzero(has), n)
    offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    idx = np.repeat(lo, n) + offs
    world_angle = pose.heading - math.pi + idx * step
    ux, uy = np.cos(world_angle), np.sin(world_angle)
    cx, cy = d[circ, 0], d[circ, 1]
    proj = ux * cx + uy * cy
    perp2 = cx * cx + cy * cy - proj * proj
    disc = r[circ] ** 2 - perp2
    ok = (disc >= 0) & (proj > 0)
    t = proj[ok] - np.sqrt(disc[ok])
    np.minimum.at(out, np.mod(idx[ok], beams), t)
    out[out > max_range] = np.inf
    return out


def raycast_scan(world: World, sensor_pose: Pose2, cfg: SensorConfig, rng: np.random.Generator,
                 timestamp: float = 0.0) -> RawScan:
    centers, radii = world.obstacles
    ranges = raycast_ranges(centers, radii, sensor_pose, cfg.beams, cfg.max_range)
    noise = rng.normal(0.0, cfg.range_noise_sigma, cfg.beams) if cfg.range_noise_sigma > 0 else 0.0
    drop = rng.random(cfg.beams) < cfg.dropout_probability if cfg.dropout_probability > 0 else None
    ranges = ranges + noise
    bad = ~np.isfinite(ranges) | (ranges < cfg.min_range) | (ranges > cfg.max_range)
    if drop is not None:
        bad |= drop
    ranges[bad] = NO_RETURN
    return RawScan(timestamp, beam_bearings(cfg.beams), ranges)


def clamp_twist(twist: Twist, cfg: DynamicsConfig) -> Twist:
    v = min(max(twist.v_y, -cfg.v_limit), cfg.v_limit)
    w = min(max(twist.omega_z, -cfg.omega_limit), cfg.omega_limit)
    return Twist(0.0, v, w)


def step_dynamics(pose: Pose2, treads: TreadSpeeds, cfg: DynamicsConfig, params: KinematicParams, dt: float) -> Pose2:
    """Ground-truth motion: kinematics, speed limits, then rotational slip."""
    tw = clamp_twist(tread_to_twist(treads, params), cfg)
    true = Twist(0.0, tw.v_y, tw.omega_z * (1.0 - cfg.slip_factor))
    return integrate_pose(pose, true, dt)
