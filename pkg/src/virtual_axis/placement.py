"""Box placement as a smooth NLP over the corner frame.

Objective: sum of squared virtual-joint values over all grid points.
Constraints: joint limits of every grid point, ``g <= 0``, ordered per point as
``q_min - q`` (6 entries) then ``q - q_max`` (6 entries).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import EulerPose, Frame, angle_diff, euler_rotation, euler_to_frame, hat, rot_x
from .robot import RobotModel
from .solver import NlpProblem
from .solver.problem import fd_steps
from .virtual import SmoothingParams, ik_virtual

VARIABLE_NAMES = ("x", "y", "z", "alpha", "beta", "gamma")


@dataclass(frozen=True, eq=False)
class BoxSpec:
    bx: int
    by: int
    dx: float
    dy: float
    pick_orientation: np.ndarray = field(default_factory=lambda: rot_x(math.pi))
    configuration: int = 0

    def __post_init__(self):
        if int(self.bx) < 1 or int(self.by) < 1:
            raise ValueError("grid needs at least one cell in each direction")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid distances must be positive")
        object.__setattr__(self, "pick_orientation", np.asarray(self.pick_orientation, dtype=float))

    @property
    def count(self) -> int:
        return self.bx * self.by

    def offsets(self) -> np.ndarray:
        """Grid cell origins in the corner frame, row-major over (k, l)."""
        k, l = np.meshgrid(np.arange(self.bx), np.arange(self.by), indexing="ij")
        return np.stack([k.ravel() * self.dx, l.ravel() * self.dy, np.zeros(self.count)], axis=1)


@dataclass(frozen=True, eq=False)
class PlacementVariables:
    pose: EulerPose
    free: tuple = (True,) * 6
    lower: np.ndarray = field(default_factory=lambda: np.full(6, -np.inf))
    upper: np.ndarray = field(default_factory=lambda: np.full(6, np.inf))

    def __post_init__(self):
        free = tuple(bool(f) for f in self.free)
        if len(free) != 6 or not any(free):
            raise ValueError("free mask needs 6 entries with at least one free variable")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).reshape(6))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).reshape(6))

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.free)

    def initial(self) -> np.ndarray:
        return self.pose.as_array()[self.mask]

    def full(self, x_free) -> np.ndarray:
        full = self.pose.as_array()
        full[self.mask] = x_free
        return full


def grid_frames(corner: EulerPose, box: BoxSpec) -> list[Frame]:
    """TCP frames ``C * Trans(k Dx, l Dy, 0) * pick`` for k, l from 0, row-major."""
    c = euler_to_frame(corner)
    rot = c.rotation @ box.pick_orientation
    return [Frame(c.rotation @ o + c.position, rot) for o in box.offsets()]


@dataclass
class PlacementEvaluation:
    objective: float
    constraints: np.ndarray
    v: np.ndarray
    q: np.ndarray


ExtraCost = Callable[[EulerPose, np.ndarray, np.ndarray], float]


@dataclass(eq=False)
class PlacementProblem:
    model: RobotModel
    box: BoxSpec
    variables: PlacementVariables
    smoothing: SmoothingParams = field(default_factory=lambda: SmoothingParams(0.01, True))
    # optional additive cost (pose, q (N, 6), v (N,)) -> float; zero by default
    extra_cost: Optional[ExtraCost] = None
    fd_step: float = 1e-6

    def __post_init__(self):
        box = self.box
        # WCP of each grid point in the corner frame
        tool_back = box.pick_orientation @ np.array([0.0, 0.0, -self.model.tool_tz])
        self._wcp_local = box.offsets() + tool_back

    @property
    def n_constraints(self) -> int:
        return 12 * self.box.count

    def wcp_positions(self, full) -> np.ndarray:
        r = euler_rotation(full[3], full[4], full[5])
        return self._wcp_local @ r.T + full[:3]

    def joints(self, x_free):
        """Virtual IK of every grid point: ``(q (N, 6), v (N,))``."""
        full = self.variables.full(x_free)
        r = euler_rotation(full[3], full[4], full[5])
        rot = r @ self.box.pick_orientation
        pos = self._wcp_local @ r.T + full[:3]
        s = self.box.configuration
        q = np.empty((len(pos), 6))
        v = np.empty(len(pos))
        for i, p in enumerate(pos):
            sol = ik_virtual(self.model, Frame(p, rot), s, self.smoothing)
            q[i] = sol.q
            v[i] = sol.v
        return q, v

    def _extra(self, x_free, q, v) -> float:
        return float(self.extra_cost(EulerPose.from_array(self.variables.full(x_free)), q, v))

    def _objective(self, x_free, q, v) -> float:
        f = float(np.sum(v * v))
        if self.extra_cost is not None:
            f += self._extra(x_free, q, v)
        return f

    def _constraints(self, q) -> np.ndarray:
        lo = self.model.q_min - q
        hi = q - self.model.q_max
        return np.hstack([lo, hi]).ravel()

    def evaluate(self, x_free) -> PlacementEvaluation:
        x_free = np.asarray(x_free, dtype=float)
        q, v = self.joints(x_free)
        return PlacementEvaluation(self._objective(x_free, q, v), self._constraints(q), v, q)

    def derivatives(self, x_free):
        """``(f, g, grad_f, jac_g)`` by central differences.

        ``v`` and ``q`` are differenced, and the objective gradient is
        assembled as ``sum 2 v dv``: points with ``v = 0`` contribute exactly
        zero even when the stencil straddles the workspace boundary. Joint
        angles are differenced on the circle, so a wrap through +-pi does not
        produce a spurious huge slope.
        """
        x = np.asarray(x_free, dtype=float)
        q0, v0 = self.joints(x)
        f0 = self._objective(x, q0, v0)
        h = fd_steps(x, self.fd_step)
        grad = np.empty(len(x))
        dq = np.empty((len(x),) + q0.shape)
        for i in range(len(x)):
            xp, xm = x.copy(), x.copy()
            xp[i] += h[i]
            xm[i] -= h[i]
            qp, vp = self.joints(xp)
            qm, vm = self.joints(xm)
            grad[i] = float(np.sum(2.0 * v0 * (vp - vm))) / (2 * h[i])
            if self.extra_cost is not None:
                grad[i] += (self._extra(xp, qp, vp) - self._extra(xm, qm, vm)) / (2 * h[i])
            dq[i] = angle_diff(qp, qm) / (2 * h[i])
        # d(q_min - q) = -dq, d(q - q_max) = dq
        jac = np.concatenate([-dq, dq], axis=2).reshape(len(x), -1).T
        return f0, self._constraints(q0), grad, jac

    def gradient(self, x_free, mode: str = "finite-difference") -> np.ndarray:
        if mode == "finite-difference":
            return self.derivatives(x_free)[2]
        if mode == "analytic-distance":
            return self.analytic_gradient(x_free)
        raise ValueError(f"unknown gradient mode {mode!r}")

    def analytic_gradient(self, x_free) -> np.ndarray:
        """Gradient of the sum of squared shell distances via the closed-form distance."""
        x = np.asarray(x_free, dtype=float)
        full = self.variables.full(x)
        a, b, c = full[3:]
        rz, ry, rx = euler_rotation(a, 0, 0), euler_rotation(0, b, 0), euler_rotation(0, 0, c)
        r = rz @ ry @ rx
        dr = (
            hat([0, 0, 1]) @ r,
            rz @ hat([0, 1, 0]) @ ry @ rx,
            r @ hat([1, 0, 0]),
        )
        pos = self._wcp_local @ r.T + full[:3]
        shell = self.model.shell
        d = np.linalg.norm(pos, axis=1)
        v = np.where(d > shell.outer_radius, d - shell.outer_radius,
                     np.where(d < shell.inner_radius, d - shell.inner_radius, 0.0))
        unit = np.divide(pos, d[:, None], out=np.zeros_like(pos), where=d[:, None] > 0)
        weight = (2.0 * v)[:, None] * unit
        g = np.empty(6)
        g[:3] = weight.sum(axis=0)
        for j, dri in enumerate(dr):
            g[3 + j] = float(np.sum(weight * (self._wcp_local @ dri.T)))
        g = g[self.variables.mask]
        if self.extra_cost is not None:
            # hook has no closed form; difference it alone
            h = fd_steps(x, self.fd_step)
            for i in range(len(x)):
                xp, xm = x.copy(), x.copy()
                xp[i] += h[i]
                xm[i] -= h[i]
                g[i] += (self._extra(xp, *self.joints(xp)) - self._extra(xm, *self.joints(xm))) / (2 * h[i])
        return g

    def to_nlp(self, gradient_mode: str = "finite-difference") -> NlpProblem:
        var = self.variables
        mask = var.mask

        def evaluate(x):
            ev = self.evaluate(x)
            return ev.objective, ev.constraints

        def derivatives(x):
            f, g, grad, jac = self.derivatives(x)
            if gradient_mode == "analytic-distance":
                grad = self.analytic_gradient(x)
            return f, g, grad, jac

        return NlpProblem(int(mask.sum()), evaluate, derivatives, var.lower[mask], var.upper[mask])


def evaluate(problem: PlacementProblem, x_free) -> PlacementEvaluation:
    return problem.evaluate(x_free)


def gradient(problem: PlacementProblem, x_free, mode: str = "finite-difference") -> np.ndarray:
    return problem.gradient(x_free, mode)
