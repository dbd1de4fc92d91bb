"""Closed-form backward transform of the original 6R robot."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Frame, compose, inverse, normalize_angle
from .robot import RobotModel, check_limits

# radial band around the shell that still counts as reachable
REACH_TOL = 1e-9
# below this the wrist (sin q5) or shoulder (distance to base axis, mm) is singular
WRIST_EPS = 1e-10
SHOULDER_EPS = 1e-9


class IkError(Exception):
    pass


class OutOfReach(IkError):
    def __init__(self, defect: float):
        super().__init__(f"WCP is {defect:.6g} mm outside the workspace shell")
        self.defect = defect


class BranchSingular(IkError):
    def __init__(self, kind: str):
        super().__init__(f"{kind} singularity: configuration branch undefined")
        self.kind = kind


@dataclass(frozen=True, eq=False)
class IkSolution:
    q: np.ndarray
    limit_ok: np.ndarray

    @property
    def within_limits(self) -> bool:
        return bool(np.all(self.limit_ok))


def check_configuration(s: int) -> int:
    if isinstance(s, bool) or int(s) != s or not 0 <= int(s) <= 7:
        raise ValueError(f"configuration must be an integer in 0..7, got {s!r}")
    return int(s)


def config_bits(s: int) -> tuple[bool, bool, bool]:
    """``(shoulder_back, elbow_down, wrist_flipped)`` for configuration ``s``."""
    s = check_configuration(s)
    return bool(s & 1), bool(s & 2), bool(s & 4)


def wcp_target_from_tcp(model: RobotModel, f_tcp: Frame) -> Frame:
    return compose(f_tcp, inverse(model.tool))


def arm_rotation(q1: float, q2: float, q3: float) -> np.ndarray:
    """Orientation of frame 3 (after joints 1-3) for the reference layout."""
    c1, s1 = math.cos(q1), math.sin(q1)
    c23, s23 = math.cos(q2 + q3), math.sin(q2 + q3)
    # Rz(q1) Rx(pi/2) Rz(q2+q3) Rx(-pi/2)
    return np.array([
        [c1 * c23, -s1, -c1 * s23],
        [s1 * c23, c1, -s1 * s23],
        [s23, 0.0, c23],
    ])


def wrist_angles(r36: np.ndarray, flipped: bool, allow_singular: bool = True) -> tuple[float, float, float]:
    """Solve ``Rz(q4) Rx(pi/2) Rz(q5) Rx(-pi/2) Rz(q6) = r36``.

    The middle factor is ``Ry(-q5)``. At sin(q5) = 0 only q4 + q6 is
    determined; then q4 := 0.
    """
    s5 = math.hypot(r36[0, 2], r36[1, 2])
    if s5 < WRIST_EPS:
        if not allow_singular:
            raise BranchSingular("wrist")
        q5 = 0.0 if r36[2, 2] > 0 else math.pi
        return 0.0, q5, math.atan2(r36[1, 0], r36[1, 1])
    if not flipped:
        q5 = math.atan2(s5, r36[2, 2])
        q4 = math.atan2(-r36[1, 2], -r36[0, 2])
        q6 = math.atan2(-r36[2, 1], r36[2, 0])
    else:
        q5 = math.atan2(-s5, r36[2, 2])
        q4 = math.atan2(r36[1, 2], r36[0, 2])
        q6 = math.atan2(r36[2, 1], -r36[2, 0])
    return normalize_angle(q4), normalize_angle(q5), normalize_angle(q6)


def elbow_cosine(model: RobotModel, d: float) -> float:
    """Cosine-theorem argument for the elbow; 1 means stretched, -1 folded."""
    return (d * d - model.l23 ** 2 - model.l35 ** 2) / (2.0 * model.l23 * model.l35)


def solve_in_shell(
    model: RobotModel,
    position,
    rotation: np.ndarray,
    s: int,
    elbow_angle: Callable[[float], float] = math.acos,
    allow_singular: bool = False,
) -> np.ndarray:
    """Joint angles for a WCP assumed inside the workspace shell.

    ``elbow_angle`` maps the clamped elbow cosine to the unsigned bend away
    from the stretched pose; ``math.acos`` gives the exact transform.
    """
    back, elbow_down, flipped = config_bits(s)
    x, y, z = (float(c) for c in position)
    sigma = -1.0 if back else 1.0
    r = math.hypot(x, y)
    if r < SHOULDER_EPS:
        if not allow_singular:
            raise BranchSingular("shoulder")
        q1 = math.pi if back else 0.0
    else:
        q1 = math.atan2(y, x) + (math.pi if back else 0.0)
    r_s = sigma * r
    d = math.sqrt(x * x + y * y + z * z)
    c = min(1.0, max(-1.0, elbow_cosine(model, d)))
    bend = elbow_angle(c)
    # elbow above the shoulder-WCP line needs sin(theta) * sigma < 0
    theta = sigma * bend if elbow_down else -sigma * bend
    q2 = math.atan2(z, r_s) - math.atan2(model.l35 * math.sin(theta), model.l23 + model.l35 * math.cos(theta))
    q3 = theta - math.pi / 2
    q1, q2, q3 = normalize_angle(q1), normalize_angle(q2), normalize_angle(q3)
    r36 = arm_rotation(q1, q2, q3).T @ rotation
    q4, q5, q6 = wrist_angles(r36, flipped, allow_singular)
    return np.array([q1, q2, q3, q4, q5, q6])


def ik_original(model: RobotModel, f_wcp: Frame, s: int, *, allow_singular: bool = False) -> IkSolution:
    """Backward transform of the original robot for configuration ``s``.

    Raises OutOfReach with the distance to the shell when the WCP cannot be
    reached for any joint values, and BranchSingular at shoulder or wrist
    singularities unless ``allow_singular`` picks a conventional solution.
    Joint limits are reported in ``limit_ok``, never enforced.
    """
    shell = model.shell
    d = float(np.linalg.norm(f_wcp.position))
    if d > shell.outer_radius + REACH_TOL:
        raise OutOfReach(d - shell.outer_radius)
    if d < shell.inner_radius - REACH_TOL:
        raise OutOfReach(shell.inner_radius - d)
    q = solve_in_shell(model, f_wcp.position, f_wcp.rotation, s, allow_singular=allow_singular)
    return IkSolution(q, check_limits(model, q))


def ik_all(model: RobotModel, f_wcp: Frame, *, allow_singular: bool = False) -> list[IkSolution]:
    """All eight branches, indexed by configuration."""
    return [ik_original(model, f_wcp, s, allow_singular=allow_singular) for s in range(8)]
