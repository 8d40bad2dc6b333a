import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vinenav.scan import Scan2D

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion id -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {verdict}: {detail}")


@pytest.fixture
def record():
    def _record(key: str, ok, detail: str):
        verdict = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        ACCEPTANCE[key] = (verdict, detail)
        print(f"{key} {verdict}: {detail}")
    return _record


def wall_scan(left: float = 1.0, right: float = 1.0, length: float = 6.0, spacing: float = 0.05,
              t: float = 0.0, behind: float = 2.0) -> Scan2D:
    """Body-frame scan of two straight walls parallel to +y (left at x=-left)."""
    ys = np.arange(-behind, length + 1e-9, spacing)
    pts = [np.column_stack((np.full_like(ys, -left), ys)) if left else np.empty((0, 2)),
           np.column_stack((np.full_like(ys, right), ys)) if right else np.empty((0, 2))]
    return Scan2D(t, np.vstack(pts))


def mirror(scan: Scan2D) -> Scan2D:
    return scan.with_points(scan.points * np.array([-1.0, 1.0]))


def rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@pytest.fixture(scope="session")
def default_run():
    """One noise-on default mission, shared by the navigator/runner/evaluation tests."""
    from vinenav.config import RunConfig
    from vinenav.runner import run_mission

    return run_mission(RunConfig())


def blocked_world(cfg, x: float = 5.0):
    """Default world with a dense plant wall across the first corridor at ``x``."""
    from vinenav.simulator import World, generate_world

    w = generate_world(cfg.world)
    y0, y1 = w.row_y[0], w.row_y[1]
    ys = np.arange(y0 + 0.1, y1 - 0.1 + 1e-9, 0.05)
    wall = np.column_stack((np.full_like(ys, x), ys))
    return World(w.config, w.row_y, w.poles, np.vstack((w.vegetation, wall)),
                 np.concatenate((w.vegetation_row, np.zeros(len(ys), dtype=int))))
