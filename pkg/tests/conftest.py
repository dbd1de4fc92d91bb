import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from virtual_axis.robot import RobotModel

# DH table of the reference robot, typed in independently of the package
L23, L35, TOOL = 315.0, 365.0, 100.0
ORACLE_TABLE = [
    (0.0, 0.0, math.pi / 2),
    (0.0, L23, 0.0),
    (0.0, 0.0, -math.pi / 2),
    (L35, 0.0, math.pi / 2),
    (0.0, 0.0, -math.pi / 2),
    (0.0, 0.0, 0.0),
]


def _hom(rot=None, pos=(0.0, 0.0, 0.0)):
    m = np.eye(4)
    if rot is not None:
        m[:3, :3] = rot
    m[:3, 3] = pos
    return m


def oracle_dh(theta, d, a, alpha):
    """Rz(theta) Tz(d) Tx(a) Rx(alpha) from scipy rotations."""
    rz = Rotation.from_euler("z", theta).as_matrix()
    rx = Rotation.from_euler("x", alpha).as_matrix()
    return _hom(rz) @ _hom(pos=(0, 0, d)) @ _hom(pos=(a, 0, 0)) @ _hom(rx)


def oracle_fk(q, v=None, tool=0.0):
    """4x4 WCP (or TCP with ``tool``) pose; ``v`` inserts the prismatic row after joint 3."""
    m = np.eye(4)
    for i, (qi, (d, a, alpha)) in enumerate(zip(q, ORACLE_TABLE)):
        if i == 3 and v is not None:
            m = m @ _hom(pos=(0, 0, v))
        m = m @ oracle_dh(qi, d, a, alpha)
    return m @ _hom(pos=(0, 0, tool))


def oracle_euler(x, y, z, a, b, c):
    """Trans(x,y,z) Rz(a) Ry(b) Rx(c) via intrinsic ZYX Euler angles."""
    return _hom(Rotation.from_euler("ZYX", [a, b, c]).as_matrix(), (x, y, z))


@pytest.fixture
def model():
    return RobotModel()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_nonsingular_q(model, rng, margin=0.05):
    """Joint vector inside the limits, away from the branch singularities."""
    from virtual_axis.robot import arm_plane_radius

    while True:
        q = rng.uniform(model.q_min, model.q_max)
        elbow = q[2] + math.pi / 2  # zero when stretched
        if abs(q[4]) < margin or abs(math.sin(elbow)) < margin:
            continue
        if abs(arm_plane_radius(model, q)) < 1.0:
            continue
        return q


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
