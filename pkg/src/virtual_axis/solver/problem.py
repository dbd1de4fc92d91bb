"""Smooth NLP container, solver options/report and the KKT residual."""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import nnls


@dataclass
class NlpProblem:
    """``min f(x)  s.t.  g(x) <= 0,  lower <= x <= upper``.

    ``evaluate(x) -> (f, g)``; ``derivatives(x) -> (f, g, grad_f, jac_g)``.
    """

    n: int
    evaluate: Callable[[np.ndarray], tuple[float, np.ndarray]]
    derivatives: Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray, np.ndarray]]
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.lower = np.full(self.n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(self.n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)

    @classmethod
    def from_functions(cls, f, g=None, *, n, grad=None, jac=None, lower=None, upper=None,
                       fd_step: float = 1e-6) -> "NlpProblem":
        """Wrap plain callables; missing derivatives use central differences."""

        def evaluate(x):
            gx = np.zeros(0) if g is None else np.atleast_1d(np.asarray(g(x), dtype=float))
            return float(f(x)), gx

        def derivatives(x):
            fx, gx = evaluate(x)
            if grad is not None and (jac is not None or g is None):
                gf = np.asarray(grad(x), dtype=float)
                jg = np.zeros((0, n)) if g is None else np.atleast_2d(np.asarray(jac(x), dtype=float))
                return fx, gx, gf, jg
            gf_fd, jg_fd = central_differences(evaluate, x, fd_step)
            gf = gf_fd if grad is None else np.asarray(grad(x), dtype=float)
            jg = jg_fd if jac is None else np.atleast_2d(np.asarray(jac(x), dtype=float))
            return fx, gx, gf, jg

        return cls(n, evaluate, derivatives, lower, upper)


def fd_steps(x: np.ndarray, rel: float) -> np.ndarray:
    return rel * np.maximum(1.0, np.abs(x))


def central_differences(evaluate, x, rel: float = 1e-6):
    x = np.asarray(x, dtype=float)
    h = fd_steps(x, rel)
    grads, jacs = [], []
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        fp, gp = evaluate(xp)
        fm, gm = evaluate(xm)
        grads.append((fp - fm) / (2 * h[i]))
        jacs.append((np.asarray(gp) - np.asarray(gm)) / (2 * h[i]))
    return np.array(grads), np.array(jacs).T.reshape(-1, len(x))


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    ITERATION_LIMIT = "IterationLimit"
    STALLED = "Stalled"


@dataclass
class SolverOptions:
    method: str = "sqp"  # "sqp" | "augmented-lagrangian"
    max_iterations: int = 100
    kkt_tolerance: float = 1e-6
    constraint_tolerance: float = 1e-6
    step_tolerance: float = 1e-12
    fd_step: float = 1e-6
    # active-set threshold for multiplier estimation
    active_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method not in ("sqp", "augmented-lagrangian"):
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("kkt_tolerance", "constraint_tolerance", "step_tolerance", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SolverOptions":
        return cls(**d)


@dataclass
class SolveReport:
    status: Status
    x: np.ndarray
    objective: float
    max_violation: float
    stationarity: float
    multipliers: np.ndarray
    iterations: int
    objective_trajectory: list = field(default_factory=list)
    violation_trajectory: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    # (merit before, merit after) per accepted step, same penalty weight
    merit_steps: list = field(default_factory=list)
    wall_time: float = 0.0
    method: str = "sqp"
    evaluations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status.value
        d["x"] = self.x.tolist()
        d["multipliers"] = self.multipliers.tolist()
        d["iterates"] = [list(map(float, it)) for it in self.iterates]
        d["merit_steps"] = [list(map(float, m)) for m in self.merit_steps]
        d["objective_trajectory"] = list(map(float, self.objective_trajectory))
        d["violation_trajectory"] = list(map(float, self.violation_trajectory))
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def max_violation(g: np.ndarray, x=None, lower=None, upper=None) -> float:
    viol = float(np.max(g, initial=0.0))
    if x is not None:
        viol = max(viol, float(np.max(lower - x, initial=0.0)), float(np.max(x - upper, initial=0.0)))
    return max(viol, 0.0)


def stationarity_measure(grad_f, jac_g, g, multipliers, x=None, lower=None, upper=None) -> float:
    """KKT residual for ``min f s.t. g <= 0`` and optional box bounds.

    Infinity norm of the projected Lagrangian gradient, plus the largest
    complementarity product ``|lambda_i g_i|``. Multipliers must be >= 0.
    """
    lam = np.asarray(multipliers, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    grad_l = np.asarray(grad_f, dtype=float) + (np.asarray(jac_g).T @ lam if len(lam) else 0.0)
    if x is not None and lower is not None:
        x = np.asarray(x, dtype=float)
        # projected gradient step over the bound box
        proj = np.clip(x - grad_l, lower, upper) - x
        res = float(np.max(np.abs(proj), initial=0.0))
    else:
        res = float(np.max(np.abs(grad_l), initial=0.0))
    comp = float(np.max(np.abs(lam * np.asarray(g)), initial=0.0))
    return res + comp


def estimate_multipliers(grad_f, jac_g, g, active_tol: float) -> np.ndarray:
    """Nonnegative least-squares multipliers on the near-active constraints."""
    lam = np.zeros(len(g))
    active = np.flatnonzero(np.asarray(g) >= -active_tol)
    if active.size == 0 or not np.any(grad_f):
        return lam
    a = np.asarray(jac_g)[active].T
    sol, _ = nnls(a, -np.asarray(grad_f, dtype=float), maxiter=50 * max(a.shape))
    lam[active] = sol
    return lam


def fd_hessian(grad_fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel: float = 1e-4,
               floor: float = 1e-8) -> np.ndarray:
    """Symmetrized finite-difference Hessian, eigenvalues lifted to stay positive definite."""
    n = len(x)
    h = fd_steps(x, rel)
    cols = []
    for i in range(n):
        xp, xm = x.copy(), x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        cols.append((grad_fn(xp) - grad_fn(xm)) / (2 * h[i]))
    hmat = np.array(cols).T
    hmat = 0.5 * (hmat + hmat.T)
    w, v = np.linalg.eigh(hmat)
    top = max(float(np.max(np.abs(w))), 1.0)
    w = np.maximum(np.abs(w), floor * top)
    return (v * w) @ v.T


Callback = Optional[Callable[[int, np.ndarray, float, float], None]]
