"""LiDAR scan conversion, filtering, and the JSON-lines scan log format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree

NO_RETURN = math.inf


@dataclass(frozen=True)
class RawScan:
    timestamp: float
    bearings: np.ndarray  # radians, strictly increasing
    ranges: np.ndarray  # meters; NO_RETURN marks a beam without echo


@dataclass(frozen=True)
class Scan2D:
    timestamp: float
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def with_points(self, points: np.ndarray) -> "Scan2D":
        return Scan2D(self.timestamp, points)


@dataclass(frozen=True)
class FilterConfig:
    min_range: float = 0.8
    max_range: float = 20.0
    downsample_keep_every: int = 2
    outlier_radius: float = 0.3
    outlier_min_neighbors: int = 2

    def __post_init__(self):
        if not 0 <= self.min_range < self.max_range:
            raise ValueError("require 0 <= min_range < max_range")
        if self.downsample_keep_every < 1:
            raise ValueError("downsample_keep_every must be >= 1")
        if not self.outlier_radius > 0:
            raise ValueError("outlier_radius must be > 0")
        if self.outlier_min_neighbors < 0:
            raise ValueError("outlier_min_neighbors must be >= 0")


def to_points(raw: RawScan) -> Scan2D:
    r = np.asarray(raw.ranges, dtype=float)
    b = np.asarray(raw.bearings, dtype=float)
    ok = np.isfinite(r)
    return Scan2D(raw.timestamp, np.column_stack((r[ok] * np.cos(b[ok]), r[ok] * np.sin(b[ok]))))


def radius_filter(scan: Scan2D, min_range: float, max_range: float) -> Scan2D:
    d = np.hypot(scan.points[:, 0], scan.points[:, 1])
    return scan.with_points(scan.points[(d >= min_range) & (d <= max_range)])


def downsample(scan: Scan2D, keep_every: int) -> Scan2D:
    if keep_every < 1:
        raise ValueError("keep_every must be >= 1")
    return scan.with_points(scan.points[::keep_every])


def outlier_filter(scan: Scan2D, radius: float, min_neighbors: int) -> Scan2D:
    """Drop points with fewer than ``min_neighbors`` other points within ``radius``."""
    if min_neighbors <= 0 or len(scan) == 0:
        return scan
    tree = cKDTree(scan.points)
    counts = tree.query_ball_point(scan.points, radius, return_length=True) - 1
    return scan.with_points(scan.points[counts >= min_neighbors])


def filter_scan(scan: Scan2D, cfg: FilterConfig) -> Scan2D:
    """radius -> downsample -> outlier, in that order."""
    scan = radius_filter(scan, cfg.min_range, cfg.max_range)
    scan = downsample(scan, cfg.downsample_keep_every)
    return outlier_filter(scan, cfg.outlier_radius, cfg.outlier_min_neighbors)


def quantize(scan: Scan2D, decimals: int = 6) -> Scan2D:
    """Round to the precision of the scan log so logged scans replay bit-exactly."""
    return Scan2D(round(scan.timestamp, decimals), np.round(scan.points, decimals) + 0.0)


# -- scan log: one JSON object per line, {"t": .., "points": [[x, y], ...]}


def scan_to_json(scan: Scan2D) -> str:
    q = quantize(scan)
    return json.dumps({"t": q.timestamp, "points": q.points.tolist()}, separators=(",", ":"))


def scan_from_json(line: str) -> Scan2D:
    obj = json.loads(line)
    return Scan2D(float(obj["t"]), np.asarray(obj["points"], dtype=float).reshape(-1, 2))


def write_scan_log(path, scans) -> None:
    with open(path, "w") as fh:
        for s in scans:
            fh.write(scan_to_json(s) + "\n")


def read_scan_log(path) -> Iterator[Scan2D]:
    """Yield scans until EOF or the first unparseable (e.g. truncated) line."""
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                yield scan_from_json(line)
            except (json.JSONDecodeError, KeyError, ValueError):
                return
