"""6R robot with central wrist, and its virtual 7-joint twin.

The virtual robot inserts an unlimited prismatic joint ``v`` between
joints 3 and 4, extending the forearm. With ``v = 0`` it coincides with
the original robot.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from .geometry import Frame, compose, dh_transform, translate

DEG = math.pi / 180.0

# a configuration component closer than this to its boundary is undecidable
BRANCH_EPS = 1e-9


class JointKind(str, Enum):
    REVOLUTE = "R"
    PRISMATIC = "P"


@dataclass(frozen=True)
class DhRow:
    joint_kind: JointKind
    theta_offset: float = 0.0
    d: float = 0.0
    a: float = 0.0
    alpha: float = 0.0

    def transform(self, value: float) -> Frame:
        if self.joint_kind is JointKind.REVOLUTE:
            return dh_transform(self.theta_offset + value, self.d, self.a, self.alpha)
        return dh_transform(self.theta_offset, self.d + value, self.a, self.alpha)


class Singular(ValueError):
    """A configuration bit cannot be decided at this joint vector."""


@dataclass(frozen=True)
class WorkspaceShell:
    """Positional shape of the mathematical workspace: a hollow sphere."""

    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not 0.0 <= self.inner_radius < self.outer_radius:
            raise ValueError("need 0 <= inner_radius < outer_radius")


def default_limits() -> tuple[np.ndarray, np.ndarray]:
    hi = np.array([170.0, 120.0, 120.0, 170.0, 120.0, 170.0]) * DEG
    return -hi, hi


def _puma_rows(l23: float, l35: float) -> tuple[DhRow, ...]:
    R = JointKind.REVOLUTE
    h = math.pi / 2
    return (
        DhRow(R, 0.0, 0.0, 0.0, h),
        DhRow(R, 0.0, 0.0, l23, 0.0),
        DhRow(R, 0.0, 0.0, 0.0, -h),
        DhRow(R, 0.0, l35, 0.0, h),
        DhRow(R, 0.0, 0.0, 0.0, -h),
        DhRow(R, 0.0, 0.0, 0.0, 0.0),
    )


@dataclass(frozen=True, eq=False)
class RobotModel:
    l23: float = 315.0
    l35: float = 365.0
    tool_tz: float = 100.0
    q_min: np.ndarray = field(default_factory=lambda: default_limits()[0])
    q_max: np.ndarray = field(default_factory=lambda: default_limits()[1])

    def __post_init__(self):
        lo = np.array(self.q_min, dtype=float).reshape(6)
        hi = np.array(self.q_max, dtype=float).reshape(6)
        if np.any(lo < -math.pi - 1e-12) or np.any(hi > math.pi + 1e-12) or np.any(lo > hi):
            raise ValueError("joint limits must satisfy -pi <= q_min <= q_max <= pi")
        if self.l23 <= 0 or self.l35 <= 0 or self.l23 == self.l35:
            raise ValueError("link lengths must be positive and distinct")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "q_min", lo)
        object.__setattr__(self, "q_max", hi)

    @cached_property
    def rows(self) -> tuple[DhRow, ...]:
        return _puma_rows(self.l23, self.l35)

    @cached_property
    def virtual_rows(self) -> tuple[DhRow, ...]:
        r = self.rows
        return r[:3] + (DhRow(JointKind.PRISMATIC),) + r[3:]

    @property
    def shell(self) -> WorkspaceShell:
        return WorkspaceShell(abs(self.l23 - self.l35), self.l23 + self.l35)

    @property
    def tool(self) -> Frame:
        return translate(0.0, 0.0, self.tool_tz)

    def with_limits(self, q_min, q_max) -> "RobotModel":
        return RobotModel(self.l23, self.l35, self.tool_tz, q_min, q_max)

    def to_dict(self) -> dict:
        return {
            "l23": self.l23,
            "l35": self.l35,
            "tool_tz": self.tool_tz,
            "q_min": self.q_min.tolist(),
            "q_max": self.q_max.tolist(),
            "rows": [
                {"type": r.joint_kind.value, "theta": r.theta_offset, "d": r.d, "a": r.a, "alpha": r.alpha}
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RobotModel":
        """Build a model from its file form.

        ``l23``/``l35``/``tool_tz`` default to the reference robot. Limits may be
        given in rad (``q_min``/``q_max``) or degrees (``q_min_deg``/``q_max_deg``).
        An optional ``rows`` list is checked against the link lengths; only the
        6R central-wrist layout is supported.
        """
        lo, hi = default_limits()
        if "q_min_deg" in data:
            lo = np.asarray(data["q_min_deg"], dtype=float) * DEG
        if "q_max_deg" in data:
            hi = np.asarray(data["q_max_deg"], dtype=float) * DEG
        lo = np.asarray(data.get("q_min", lo), dtype=float)
        hi = np.asarray(data.get("q_max", hi), dtype=float)
        model = cls(float(data.get("l23", 315.0)), float(data.get("l35", 365.0)),
                    float(data.get("tool_tz", 100.0)), lo, hi)
        if "rows" in data:
            rows = tuple(
                DhRow(JointKind(r.get("type", "R")), float(r.get("theta", 0.0)), float(r.get("d", 0.0)),
                      float(r.get("a", 0.0)), float(r.get("alpha", 0.0)))
                for r in data["rows"]
            )
            expected = model.rows
            if len(rows) != 6 or any(
                r.joint_kind != e.joint_kind
                or not np.allclose([r.theta_offset, r.d, r.a, r.alpha], [e.theta_offset, e.d, e.a, e.alpha], atol=1e-12)
                for r, e in zip(rows, expected)
            ):
                raise ValueError("rows do not describe the supported 6R central-wrist layout for l23/l35")
        return model


def load_model(path) -> RobotModel:
    return RobotModel.from_dict(json.loads(Path(path).read_text()))


def _chain(rows, values) -> Frame:
    f = rows[0].transform(values[0])
    for row, val in zip(rows[1:], values[1:]):
        f = compose(f, row.transform(val))
    return f


def fk_wcp(model: RobotModel, q) -> Frame:
    q = np.asarray(q, dtype=float)
    if q.shape != (6,):
        raise ValueError("expected 6 joint values")
    return _chain(model.rows, q)


def fk_tcp(model: RobotModel, q) -> Frame:
    return compose(fk_wcp(model, q), model.tool)


def fk_virtual_wcp(model: RobotModel, qt) -> Frame:
    """Forward transform of the virtual robot, ``qt = (q1, q2, q3, v, q4, q5, q6)``."""
    qt = np.asarray(qt, dtype=float)
    if qt.shape != (7,):
        raise ValueError("expected 7 joint values (q1, q2, q3, v, q4, q5, q6)")
    return _chain(model.virtual_rows, qt)


def fk_virtual_tcp(model: RobotModel, qt) -> Frame:
    return compose(fk_virtual_wcp(model, qt), model.tool)


def arm_plane_radius(model: RobotModel, q) -> float:
    """Signed horizontal reach of the WCP along the arm plane direction q1."""
    q2, q3 = q[1], q[2]
    return model.l23 * math.cos(q2) - model.l35 * math.sin(q2 + q3)


def configuration_of(model: RobotModel, q) -> int:
    """Configuration index ``s`` of a joint vector.

    bit 0 shoulder: 0 when the WCP lies in front of the arm plane (q1 points
    at it), 1 when the arm reaches over its back.
    bit 1 elbow: 0 when the elbow lies above the shoulder-to-WCP line, 1 below.
    bit 2 wrist: 0 for q5 > 0, 1 for q5 < 0.
    """
    q = np.asarray(q, dtype=float)
    r_s = arm_plane_radius(model, q)
    elbow = math.sin(q[2] + math.pi / 2)
    wrist = math.sin(q[4])
    if abs(r_s) < BRANCH_EPS:
        raise Singular("shoulder: WCP on the base axis")
    if abs(elbow) < BRANCH_EPS:
        raise Singular("elbow: arm stretched or folded")
    if abs(wrist) < BRANCH_EPS:
        raise Singular("wrist: q5 at 0 or pi")
    shoulder_bit = 0 if r_s > 0 else 1
    elbow_bit = 0 if elbow * math.copysign(1.0, r_s) < 0 else 1
    wrist_bit = 0 if wrist > 0 else 1
    return shoulder_bit | (elbow_bit << 1) | (wrist_bit << 2)


def check_limits(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return (q >= model.q_min) & (q <= model.q_max)
