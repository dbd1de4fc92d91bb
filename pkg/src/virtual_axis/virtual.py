"""Total backward transform of the virtual robot and elbow-kink smoothing.

Inside the workspace shell the virtual joint stays at ``v = 0`` and the
original solution is used. Outside, joints 2 and 3 are stretched (or fully
folded for the inner void) and ``v`` absorbs the remaining distance, so
``|v|`` is the distance of the WCP to the shell.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Frame, compose, normalize_angle, translate
from .ik import arm_rotation, config_bits, solve_in_shell, wcp_target_from_tcp, wrist_angles
from .robot import RobotModel, WorkspaceShell


@dataclass(frozen=True)
class SmoothingParams:
    epsilon: float = 0.01
    enabled: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")


NO_SMOOTHING = SmoothingParams(enabled=False)


@dataclass(frozen=True, eq=False)
class QuinticPatch:
    """Degree-5 replacement for ``acos`` on ``[1 - epsilon, 1]``.

    Coefficients are in the scaled variable ``tau = (c - (1 - epsilon)) / epsilon``,
    ascending powers. The patch matches value, slope and curvature of ``acos``
    at ``tau = 0`` and is flat to second order with value 0 at ``tau = 1``.
    """

    epsilon: float
    coefficients: np.ndarray

    @classmethod
    def for_epsilon(cls, epsilon: float) -> "QuinticPatch":
        return _patch(float(epsilon))

    @property
    def start(self) -> float:
        return 1.0 - self.epsilon

    def derivative(self, c: float, order: int = 0) -> float:
        tau = (c - self.start) / self.epsilon
        coef = np.polynomial.polynomial.polyder(self.coefficients, order) if order else self.coefficients
        return float(np.polynomial.polynomial.polyval(tau, coef)) / self.epsilon ** order

    def __call__(self, c: float) -> float:
        tau = (c - self.start) / self.epsilon
        b = self.coefficients
        return b[0] + tau * (b[1] + tau * (b[2] + tau * (b[3] + tau * (b[4] + tau * b[5]))))


def acos_derivatives(c: float) -> tuple[float, float, float]:
    w = 1.0 - c * c
    return math.acos(c), -1.0 / math.sqrt(w), -c / w ** 1.5


@lru_cache(maxsize=32)
def _patch(epsilon: float) -> QuinticPatch:
    f0, f1, f2 = acos_derivatives(1.0 - epsilon)
    b0, b1, b2 = f0, f1 * epsilon, 0.5 * f2 * epsilon ** 2
    # value, slope, curvature vanish at tau = 1
    lhs = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
    rhs = np.array([-(b0 + b1 + b2), -(b1 + 2.0 * b2), -2.0 * b2])
    b3, b4, b5 = np.linalg.solve(lhs, rhs)
    coef = np.array([b0, b1, b2, b3, b4, b5])
    coef.flags.writeable = False
    return QuinticPatch(epsilon, coef)


def smooth_elbow_angle(c: float, params: SmoothingParams = NO_SMOOTHING) -> float:
    """Unsigned elbow bend from its cosine, optionally C^2-smoothed near c = 1."""
    c = min(1.0, max(-1.0, float(c)))
    if not params.enabled or c <= 1.0 - params.epsilon:
        return math.acos(c)
    if c == 1.0:
        return 0.0
    return _patch(params.epsilon)(c)


def distance_to_shell(shell: WorkspaceShell, p) -> float:
    """Signed distance of ``p`` to the shell: positive outside, negative in the void."""
    d = math.sqrt(sum(float(c) ** 2 for c in p))
    if d > shell.outer_radius:
        return d - shell.outer_radius
    if d < shell.inner_radius:
        return d - shell.inner_radius
    return 0.0


@dataclass(frozen=True, eq=False)
class VirtualJoints:
    q: np.ndarray  # q1..q6 [rad]
    v: float  # virtual prismatic joint [mm]

    def as_array(self) -> np.ndarray:
        """Chain order ``(q1, q2, q3, v, q4, q5, q6)``."""
        q = self.q
        return np.array([q[0], q[1], q[2], self.v, q[3], q[4], q[5]])

    @classmethod
    def from_array(cls, qt) -> "VirtualJoints":
        qt = np.asarray(qt, dtype=float)
        return cls(np.array([qt[0], qt[1], qt[2], qt[4], qt[5], qt[6]]), float(qt[3]))


def ik_virtual(model: RobotModel, f_wcp: Frame, s: int,
               smoothing: SmoothingParams = NO_SMOOTHING) -> VirtualJoints:
    """Backward transform of the virtual robot; defined for every frame.

    The virtual joint takes the smallest magnitude admitting a solution.
    Outside the shell (and in the inner void) the elbow bit is irrelevant:
    both elbow branches coincide in the stretched/folded pose.
    """
    p = f_wcp.position
    v = distance_to_shell(model.shell, p)
    if v == 0.0:
        q = solve_in_shell(model, p, f_wcp.rotation, s,
                           elbow_angle=lambda c: smooth_elbow_angle(c, smoothing),
                           allow_singular=True)
        return VirtualJoints(q, 0.0)

    back, _, flipped = config_bits(s)
    x, y, z = (float(c) for c in p)
    r = math.hypot(x, y)
    q1 = (math.atan2(y, x) if r > 0.0 else 0.0) + (math.pi if back else 0.0)
    r_s = -r if back else r
    if v > 0.0:
        q2 = math.atan2(z, r_s)
        q3 = -math.pi / 2
    else:
        # folded arm: WCP = (l23 - l35 - v) * u(q2) in the arm plane
        fold = model.l23 - model.l35
        if fold < 0.0:
            q2 = math.atan2(-z, -r_s) if (r > 0.0 or z != 0.0) else 0.0
        else:
            v = -v
            q2 = math.atan2(z, r_s) if (r > 0.0 or z != 0.0) else 0.0
        q3 = math.pi / 2
    q1, q2, q3 = normalize_angle(q1), normalize_angle(q2), normalize_angle(q3)
    r36 = arm_rotation(q1, q2, q3).T @ f_wcp.rotation
    q4, q5, q6 = wrist_angles(r36, flipped, allow_singular=True)
    return VirtualJoints(np.array([q1, q2, q3, q4, q5, q6]), float(v))


def ik_virtual_tcp(model: RobotModel, f_tcp: Frame, s: int,
                   smoothing: SmoothingParams = NO_SMOOTHING) -> VirtualJoints:
    return ik_virtual(model, wcp_target_from_tcp(model, f_tcp), s, smoothing)


# rotation that points the tool straight down
TOOL_DOWN = np.diag([-1.0, 1.0, -1.0])


@dataclass
class SweepTable:
    x: np.ndarray  # TCP x coordinate per sample [mm]
    q: np.ndarray  # (n, 6) joint angles [rad]
    v: np.ndarray  # virtual joint [mm]
    tcp: np.ndarray = field(repr=False, default=None)  # (n, 3) TCP positions

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "q1", "q2", "q3", "q4", "q5", "q6", "v"])
        for x, q, v in zip(self.x, self.q, self.v):
            w.writerow([repr(float(x))] + [repr(float(a)) for a in q] + [repr(float(v))])
        return buf.getvalue()


def sweep_line(model: RobotModel, l0, l1, rotation=TOOL_DOWN, s: int = 0, n_samples: int = 801,
               smoothing: SmoothingParams = NO_SMOOTHING) -> SweepTable:
    """Move the TCP on the straight line ``l0 -> l1`` at constant orientation."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    l0 = np.asarray(l0, dtype=float)
    l1 = np.asarray(l1, dtype=float)
    ts = np.linspace(0.0, 1.0, n_samples)
    pts = l0 + ts[:, None] * (l1 - l0)
    return sweep_points(model, pts, rotation, s, smoothing)


def sweep_points(model: RobotModel, points, rotation=TOOL_DOWN, s: int = 0,
                 smoothing: SmoothingParams = NO_SMOOTHING) -> SweepTable:
    points = np.asarray(points, dtype=float)
    rotation = np.asarray(rotation, dtype=float)
    tool_inv = translate(0.0, 0.0, -model.tool_tz)
    qs = np.empty((len(points), 6))
    vs = np.empty(len(points))
    for i, p in enumerate(points):
        sol = ik_virtual(model, compose(Frame(p, rotation), tool_inv), s, smoothing)
        qs[i] = sol.q
        vs[i] = sol.v
    return SweepTable(points[:, 0].copy(), qs, vs, points)


def boundary_crossing(model: RobotModel, l0, l1, rotation=TOOL_DOWN, n_coarse: int = 1001) -> np.ndarray | None:
    """First TCP point on ``l0 -> l1`` where the WCP leaves (or enters) the shell.

    Returns None when the whole segment stays on one side.
    """
    l0 = np.asarray(l0, dtype=float)
    l1 = np.asarray(l1, dtype=float)
    offset = np.asarray(rotation, dtype=float) @ np.array([0.0, 0.0, -model.tool_tz])
    shell = model.shell

    def inside(t: float) -> bool:
        return distance_to_shell(shell, l0 + t * (l1 - l0) + offset) == 0.0

    ts = np.linspace(0.0, 1.0, n_coarse)
    start = inside(0.0)
    prev = 0.0
    for t in ts[1:]:
        if inside(t) != start:
            lo, hi = prev, float(t)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if inside(mid) == start:
                    lo = mid
                else:
                    hi = mid
            return l0 + hi * (l1 - l0)
        prev = float(t)
    return None
