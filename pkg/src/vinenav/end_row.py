"""Headland navigation along the row ends.

Row ends are found by Euclidean cluster extraction on the filtered scan.
Each cluster yields one end point, either the nearest well-supported
cluster point ("nearest") or that point projected onto a RANSAC line fitted
to the cluster ("line_fitting"). The robot follows the segment joining the
end points behind and ahead of it, counts the row ends it passes, and stops
midway between two row ends to enter the next corridor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import Point2, Pose2, Segment2, distance_to_line, points_from_frame, points_to_frame
from .odometry import ZERO_TWIST, Twist
from .scan import Scan2D
from .turn import LEFT, RIGHT

NEAREST, LINE_FITTING = "nearest", "line_fitting"
POLICIES = (NEAREST, LINE_FITTING)


class DegenerateClusterError(ValueError):
    """All cluster points coincide, so no line direction exists."""


@dataclass(frozen=True)
class EndRowConfig:
    cluster_tolerance: float = 0.5
    min_cluster_size: int = 4
    neighborhood_radius: float = 0.3
    neighborhood_min_points: int = 3
    ransac_iterations: int = 100
    ransac_threshold: float = 0.1
    follow_distance: float = 1.5
    rows_to_skip: int = 1
    rng_seed: int = 0
    policy: str = LINE_FITTING
    speed: float = 0.5
    heading_gain: float = 1.5
    lateral_gain: float = 0.8
    max_approach_angle: float = 0.5
    omega_max: float = 0.8
    max_lateral: float = 4.0
    pass_hysteresis: float = 0.2
    association_radius: float = 0.8
    fragment_slope: float = 0.5
    same_row_gap: float = 0.8
    degraded_after: float = 1.0

    def __post_init__(self):
        for name in ("cluster_tolerance", "neighborhood_radius", "ransac_threshold", "follow_distance",
                     "speed", "max_lateral", "association_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.ransac_iterations < 1:
            raise ValueError("ransac_iterations must be >= 1")
        if self.min_cluster_size < 1 or self.neighborhood_min_points < 0 or self.rows_to_skip < 1:
            raise ValueError("counts out of range")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")


@dataclass(frozen=True)
class Cluster:
    id: int
    points: np.ndarray  # (n, 2), sensor frame, in scan order


@dataclass(frozen=True)
class EndPoint:
    position: Point2
    cluster_id: int
    policy: str


@dataclass(frozen=True)
class LineModel:
    point: Point2
    direction: tuple[float, float]

    def project(self, p) -> Point2:
        t = (p[0] - self.point[0]) * self.direction[0] + (p[1] - self.point[1]) * self.direction[1]
        return Point2(self.point[0] + t * self.direction[0], self.point[1] + t * self.direction[1])

    def distances(self, points: np.ndarray) -> np.ndarray:
        d = np.asarray(points, dtype=float).reshape(-1, 2) - self.point
        return np.abs(d[:, 0] * self.direction[1] - d[:, 1] * self.direction[0])


@dataclass(frozen=True)
class RansacResult:
    model: LineModel
    inliers: np.ndarray  # bool mask against the final (refitted) model
    best_candidate: int  # index into the sampled pairs
    candidate_inliers: int


# -- perception -------------------------------------------------------------


def euclidean_cluster(scan: Scan2D, tolerance: float, min_size: int) -> list[Cluster]:
    """Connected components of the graph linking points at most ``tolerance`` apart."""
    pts = scan.points
    n = len(pts)
    if n == 0:
        return []
    pairs = cKDTree(pts).query_pairs(tolerance, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    groups = [np.flatnonzero(labels == lab) for lab in np.unique(labels)]
    groups = [g for g in groups if len(g) >= min_size]
    centroids = [pts[g].mean(axis=0) for g in groups]
    order = sorted(range(len(groups)), key=lambda i: (math.atan2(centroids[i][1], centroids[i][0]), groups[i][0]))
    return [Cluster(cid, pts[groups[i]]) for cid, i in enumerate(order)]


def qualified_mask(points: np.ndarray, radius: float, min_points: int) -> np.ndarray:
    """Points with at least ``min_points`` other cluster points within ``radius``."""
    counts = cKDTree(points).query_ball_point(points, radius, return_length=True) - 1
    return counts >= min_points


def pick_nearest(cluster: Cluster, robot, cfg: EndRowConfig) -> EndPoint | None:
    pts = cluster.points
    ok = qualified_mask(pts, cfg.neighborhood_radius, cfg.neighborhood_min_points)
    if not ok.any():
        return None
    d = np.hypot(pts[:, 0] - robot[0], pts[:, 1] - robot[1])
    d[~ok] = np.inf
    i = int(np.argmin(d))
    return EndPoint(Point2(float(pts[i, 0]), float(pts[i, 1])), cluster.id, NEAREST)


def sample_pairs(n: int, iterations: int, rng: np.random.Generator) -> np.ndarray:
    """``iterations`` index pairs (i, j) with i != j drawn uniformly."""
    i = rng.integers(0, n, size=iterations)
    j = rng.integers(0, n - 1, size=iterations)
    j = j + (j >= i)
    return np.column_stack((i, j))


def _tls_line(points: np.ndarray) -> LineModel:
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    d = vt[0]
    if d[1] < 0 or (d[1] == 0 and d[0] < 0):
        d = -d
    return LineModel(Point2(float(c[0]), float(c[1])), (float(d[0]), float(d[1])))


def ransac_line(points: np.ndarray, iterations: int, threshold: float, rng: np.random.Generator) -> RansacResult:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two points to fit a line")
    spread = pts - pts[0]
    if not np.any(spread):
        raise DegenerateClusterError("all points coincide")
    pairs = sample_pairs(n, iterations, rng)
    a, b = pts[pairs[:, 0]], pts[pairs[:, 1]]
    dirs = b - a
    norms = np.hypot(dirs[:, 0], dirs[:, 1])
    valid = norms > 0
    dirs[valid] /= norms[valid, None]
    # |cross(p - a, dir)| for every candidate x point
    rel = pts[None, :, :] - a[:, None, :]
    dist = np.abs(rel[:, :, 0] * dirs[:, None, 1] - rel[:, :, 1] * dirs[:, None, 0])
    counts = np.where(valid, np.count_nonzero(dist <= threshold, axis=1), -1)
    best = int(np.argmax(counts))
    if counts[best] < 0:
        model = _tls_line(pts)
    else:
        model = _tls_line(pts[dist[best] <= threshold])
    return RansacResult(model, model.distances(pts) <= threshold, best, int(counts[best]))


def fit_line_ransac(cluster: Cluster, cfg: EndRowConfig) -> LineModel:
    rng = np.random.default_rng(cfg.rng_seed)
    return ransac_line(cluster.points, cfg.ransac_iterations, cfg.ransac_threshold, rng).model


def pick_line_fitting(cluster: Cluster, robot, cfg: EndRowConfig) -> EndPoint | None:
    nearest = pick_nearest(cluster, robot, cfg)
    if nearest is None:
        return None
    line = fit_line_ransac(cluster, cfg)
    return EndPoint(line.project(nearest.position), cluster.id, LINE_FITTING)


def pick_end_point(cluster: Cluster, robot, cfg: EndRowConfig, policy: str | None = None) -> EndPoint | None:
    policy = policy or cfg.policy
    if policy == NEAREST:
        return pick_nearest(cluster, robot, cfg)
    try:
        return pick_line_fitting(cluster, robot, cfg)
    except DegenerateClusterError:
        return None


def detect_end_points(scan: Scan2D, cfg: EndRowConfig, policy: str | None = None) -> list[EndPoint]:
    clusters = euclidean_cluster(scan, cfg.cluster_tolerance, cfg.min_cluster_size)
    out = []
    for c in clusters:
        ep = pick_end_point(c, (0.0, 0.0), cfg, policy)
        if ep is not None:
            out.append(ep)
    return out


def select_row_ends(ends: list[EndPoint], side: str, cfg: EndRowConfig) -> list[EndPoint]:
    """Keep end points on the row-end line on ``side`` of the robot.

    Rows broken into several clusters produce extra end points further from
    the headland. An end point is dropped when another one lies closer to the
    robot laterally and within ``same_row_gap + fragment_slope * lateral gap``
    along-track; the slope term tolerates a robot that is not yet parallel to
    the row-end line.
    """
    sign = -1.0 if side == LEFT else 1.0
    cand = [e for e in ends if sign * e.position.x > 0 and abs(e.position.x) <= cfg.max_lateral]
    keep = []
    for e in cand:
        lat = abs(e.position.x)
        if any(abs(o.position.x) < lat
               and abs(o.position.y - e.position.y) < cfg.same_row_gap + (lat - abs(o.position.x)) * cfg.fragment_slope
               for o in cand):
            continue
        keep.append(e)
    return keep


def build_direction_segment(endpoints) -> Segment2:
    """Segment from the end point just behind (or abreast of) the robot to the
    first one ahead, using body-frame along-track order (+y)."""
    pts = [ep.position if isinstance(ep, EndPoint) else Point2(*ep) for ep in endpoints]
    if len(pts) < 2:
        raise ValueError("need at least two end points")
    pts = sorted(pts, key=lambda p: p[1])
    behind = [p for p in pts if p[1] <= 0]
    ahead = [p for p in pts if p[1] > 0]
    if behind and ahead:
        return Segment2(behind[-1], ahead[0])
    if ahead:
        return Segment2(ahead[0], ahead[1])
    return Segment2(behind[-2], behind[-1])


def segment_heading_error(seg: Segment2) -> float:
    """Counter-clockwise rotation that makes body +y parallel to ``seg``."""
    dx, dy = seg.direction
    if dy < 0:
        dx, dy = -dx, -dy
    return math.atan2(-dx, dy)


def lateral_distance(seg: Segment2) -> float:
    """Distance from the robot (origin) to the segment's supporting line."""
    return abs(distance_to_line((0.0, 0.0), seg.a, seg.direction))


# -- control ----------------------------------------------------------------


@dataclass
class TrackedEnd:
    position: np.ndarray  # odometry frame
    status: str  # "ahead" | "behind" | "abreast"
    counted: bool = False


@dataclass
class EndRowState:
    side: str = LEFT  # side of the robot where the row ends are
    tracked: list[TrackedEnd] = field(default_factory=list)
    passed_count: int = 0
    goal: np.ndarray | None = None  # odometry-frame stop point
    goal_dir: np.ndarray | None = None
    arrived: bool = False
    last_command: Twist = ZERO_TWIST
    last_good_t: float | None = None
    degraded: bool = False
    last_segment: Segment2 | None = None
    last_detections: dict = field(default_factory=dict)
    cluster_count: int = 0


def _update_tracks(state: EndRowState, end_body: np.ndarray, odom_pose: Pose2, cfg: EndRowConfig) -> None:
    odom_pts = points_from_frame(end_body, odom_pose)
    for p in odom_pts:
        best, best_d = None, cfg.association_radius
        for tr in state.tracked:
            d = float(np.hypot(*(tr.position - p)))
            if d <= best_d:
                best, best_d = tr, d
        if best is None:
            state.tracked.append(TrackedEnd(p.copy(), "abreast"))
        else:
            best.position = p.copy()
    h = cfg.pass_hysteresis
    for tr in state.tracked:
        along = points_to_frame(tr.position, odom_pose)[0, 1]
        if along > h:
            tr.status = "ahead"
        elif along < -h:
            if tr.status == "ahead" and not tr.counted:
                tr.counted = True
                state.passed_count += 1
            tr.status = "behind"


def _update_goal(state: EndRowState, odom_pose: Pose2, cfg: EndRowConfig) -> None:
    if state.passed_count < cfg.rows_to_skip:
        return
    along = {id(tr): points_to_frame(tr.position, odom_pose)[0, 1] for tr in state.tracked}
    passed = [tr for tr in state.tracked if tr.counted]
    ahead = [tr for tr in state.tracked if tr.status == "ahead" and not tr.counted]
    if not passed or not ahead:
        return
    last = max(passed, key=lambda tr: along[id(tr)])
    nxt = min(ahead, key=lambda tr: along[id(tr)])
    mid = (along[id(last)] + along[id(nxt)]) / 2
    fwd = np.array(odom_pose.forward)
    state.goal = np.array([odom_pose.x, odom_pose.y]) + mid * fwd
    state.goal_dir = fwd


def goal_reached(state: EndRowState, odom_pose: Pose2) -> bool:
    if state.goal is None:
        return False
    return float(np.dot(np.array([odom_pose.x, odom_pose.y]) - state.goal, state.goal_dir)) >= 0.0


def end_row_step(scan: Scan2D, odom_pose: Pose2, state: EndRowState, cfg: EndRowConfig):
    """One perception + control update. Returns ``(Twist, passed_count, arrived)``."""
    if state.last_good_t is None:
        state.last_good_t = scan.timestamp
    if state.arrived or goal_reached(state, odom_pose):
        state.arrived = True
        state.last_command = ZERO_TWIST
        return ZERO_TWIST, state.passed_count, True

    clusters = euclidean_cluster(scan, cfg.cluster_tolerance, cfg.min_cluster_size)
    state.cluster_count = len(clusters)
    detections = {p: [] for p in POLICIES}
    for c in clusters:
        near = pick_nearest(c, (0.0, 0.0), cfg)
        if near is None:
            continue
        detections[NEAREST].append(near)
        try:
            line = fit_line_ransac(c, cfg)
        except DegenerateClusterError:
            continue
        detections[LINE_FITTING].append(EndPoint(line.project(near.position), c.id, LINE_FITTING))
    sign = -1.0 if state.side == LEFT else 1.0
    for p in POLICIES:
        detections[p] = select_row_ends(detections[p], state.side, cfg)
    state.last_detections = detections
    ends = detections[cfg.policy]

    if len(ends) < 2:
        if scan.timestamp - state.last_good_t > cfg.degraded_after:
            state.degraded = True
        return state.last_command, state.passed_count, False
    state.last_good_t = scan.timestamp
    state.degraded = False

    _update_tracks(state, np.array([e.position for e in ends]), odom_pose, cfg)
    _update_goal(state, odom_pose, cfg)
    if goal_reached(state, odom_pose):
        state.arrived = True
        state.last_command = ZERO_TWIST
        return ZERO_TWIST, state.passed_count, True

    seg = build_direction_segment(ends)
    state.last_segment = seg
    heading_err = segment_heading_error(seg)
    excess = lateral_distance(seg) - cfg.follow_distance
    # turning toward the row ends is positive omega when they are on the left
    approach = -sign * min(max(cfg.lateral_gain * excess, -cfg.max_approach_angle), cfg.max_approach_angle)
    omega = cfg.heading_gain * (heading_err + approach)
    omega = min(max(omega, -cfg.omega_max), cfg.omega_max)
    state.last_command = Twist(0.0, cfg.speed, omega)
    return state.last_command, state.passed_count, False


def other_side(side: str) -> str:
    return RIGHT if side == LEFT else LEFT
