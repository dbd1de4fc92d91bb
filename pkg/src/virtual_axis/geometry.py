"""Rigid frames over R^3 x SO(3) and the elementary DH factors.

Positions are in mm, angles in rad. Rotations are plain 3x3 numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# global equality tolerance for frames (mm on position, unitless on rotation)
FRAME_TOL = 1e-9


class GimbalLock(ValueError):
    """Euler extraction is not unique because |beta| is at pi/2."""


def normalize_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def angle_diff(a, b):
    """Signed difference a - b wrapped to [-pi, pi]; works on arrays."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def _cos_sin(a: float) -> tuple[float, float]:
    # exact values at multiples of pi/2 keep the DH constants free of 6e-17 noise
    k = a / (0.5 * math.pi)
    if k == round(k):
        return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[int(round(k)) % 4]
    return math.cos(a), math.sin(a)


def rot_x(a: float) -> np.ndarray:
    c, s = _cos_sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = _cos_sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = _cos_sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def hat(w) -> np.ndarray:
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation (unit quaternion sampling)."""
    q = rng.normal(size=4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


@dataclass(frozen=True, eq=False)
class Frame:
    """Rigid transform: ``p_world = rotation @ p_local + position``."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        p.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "rotation", r)

    def __matmul__(self, other: "Frame") -> "Frame":
        return compose(self, other)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.position
        return m

    @classmethod
    def from_matrix(cls, m) -> "Frame":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, 3], m[:3, :3])

    def allclose(self, other: "Frame", tol: float = FRAME_TOL) -> bool:
        return frame_error(self, other) <= tol

    def to_dict(self) -> dict:
        return {"position": self.position.tolist(), "rotation": self.rotation.tolist()}


IDENTITY = Frame()


def translate(x: float, y: float, z: float) -> Frame:
    return Frame(np.array([x, y, z], dtype=float), np.eye(3))


def rotation_frame(r: np.ndarray) -> Frame:
    return Frame(np.zeros(3), r)


def compose(a: Frame, b: Frame) -> Frame:
    return Frame(a.rotation @ b.position + a.position, a.rotation @ b.rotation)


def inverse(f: Frame) -> Frame:
    rt = f.rotation.T
    return Frame(-rt @ f.position, rt)


def frame_error(a: Frame, b: Frame) -> float:
    """Largest absolute deviation over position and rotation entries."""
    return max(
        float(np.max(np.abs(a.position - b.position))),
        float(np.max(np.abs(a.rotation - b.rotation))),
    )


def is_rotation(r: np.ndarray, tol: float = 1e-12) -> bool:
    r = np.asarray(r, dtype=float)
    return (
        r.shape == (3, 3)
        and np.max(np.abs(r.T @ r - np.eye(3))) <= tol
        and abs(np.linalg.det(r) - 1.0) <= tol
    )


@dataclass(frozen=True)
class EulerPose:
    """Corner-frame parameters: ``Trans(x,y,z) Rz(alpha) Ry(beta) Rx(gamma)``."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.alpha, self.beta, self.gamma], dtype=float)

    @classmethod
    def from_array(cls, a) -> "EulerPose":
        return cls(*(float(v) for v in a))

    def normalized(self) -> "EulerPose":
        return EulerPose(self.x, self.y, self.z, normalize_angle(self.alpha),
                         normalize_angle(self.beta), normalize_angle(self.gamma))


def euler_rotation(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return rot_z(alpha) @ rot_y(beta) @ rot_x(gamma)


def euler_to_frame(p: EulerPose) -> Frame:
    return Frame(np.array([p.x, p.y, p.z]), euler_rotation(p.alpha, p.beta, p.gamma))


def frame_to_euler(f: Frame) -> EulerPose:
    r = f.rotation
    if abs(r[2, 0]) >= 1.0 - 1e-9:
        raise GimbalLock(f"beta at +-pi/2 (r31={r[2, 0]:.12g})")
    beta = math.atan2(-r[2, 0], math.hypot(r[0, 0], r[1, 0]))
    alpha = math.atan2(r[1, 0], r[0, 0])
    gamma = math.atan2(r[2, 1], r[2, 2])
    x, y, z = f.position
    return EulerPose(float(x), float(y), float(z), normalize_angle(alpha),
                     normalize_angle(beta), normalize_angle(gamma))


def dh_transform(theta: float, d: float, a: float, alpha: float) -> Frame:
    """``Rz(theta) Tz(d) Tx(a) Rx(alpha)``."""
    ct, st = _cos_sin(theta)
    ca, sa = _cos_sin(alpha)
    rot = np.array([
        [ct, -st * ca, st * sa],
        [st, ct * ca, -ct * sa],
        [0.0, sa, ca],
    ])
    return Frame(np.array([a * ct, a * st, d]), rot)
