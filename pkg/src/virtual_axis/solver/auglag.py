"""Augmented Lagrangian for inequality constraints, box bounds kept explicitly.

Inner problems ``min_x L(x; lam, rho)`` over the bound box are solved by a
projected BFGS method with Armijo backtracking along the projection arc.
"""
from __future__ import annotations

import time

import numpy as np

from .problem import (
    Callback,
    NlpProblem,
    SolveReport,
    SolverOptions,
    Status,
    fd_hessian,
    max_violation,
    stationarity_measure,
)

ARMIJO = 1e-4
INNER_MAX = 200
RHO_MAX = 1e12


def _al_value(f, g, lam, rho):
    shifted = np.maximum(0.0, lam + rho * g)
    return f + float(shifted @ shifted - lam @ lam) / (2.0 * rho)


def _al_grad(grad, jac, g, lam, rho):
    return grad + jac.T @ np.maximum(0.0, lam + rho * g)


class _Counter:
    def __init__(self, problem):
        self.problem = problem
        self.n = 0

    def evaluate(self, x):
        self.n += 1
        return self.problem.evaluate(x)

    def derivatives(self, x):
        self.n += 2 * len(x) + 1
        return self.problem.derivatives(x)


def _projected_bfgs(prob: _Counter, x, lam, rho, lower, upper, tol, merit_steps):
    f, g, grad, jac = prob.derivatives(x)
    val = _al_value(f, g, lam, rho)
    gl = _al_grad(grad, jac, g, lam, rho)

    def grad_only(z):
        fz, gz, grz, jz = prob.derivatives(z)
        return _al_grad(grz, jz, gz, lam, rho)

    hinv = np.linalg.inv(fd_hessian(grad_only, x))
    for _ in range(INNER_MAX):
        pg = np.clip(x - gl, lower, upper) - x
        if np.max(np.abs(pg), initial=0.0) <= tol:
            break
        # bounds that are active and pushed against stay fixed
        fixed = ((x <= lower) & (gl > 0)) | ((x >= upper) & (gl < 0))
        free = ~fixed
        d = np.zeros_like(x)
        d[free] = -hinv[np.ix_(free, free)] @ gl[free]
        if gl @ d >= 0.0:
            hinv = np.eye(len(x)) * float(np.max(np.abs(np.diag(hinv))))
            d = np.where(free, -hinv.diagonal() * gl, 0.0)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-12:
            xn = np.clip(x + alpha * d, lower, upper)
            fn, gn = prob.evaluate(xn)
            valn = _al_value(fn, gn, lam, rho)
            if valn <= val + ARMIJO * float(gl @ (xn - x)):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        fn, gn, gradn, jacn = prob.derivatives(xn)
        gln = _al_grad(gradn, jacn, gn, lam, rho)
        merit_steps.append((val, valn))
        s = xn - x
        y = gln - gl
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            r = 1.0 / sy
            eye = np.eye(len(x))
            hinv = (eye - r * np.outer(s, y)) @ hinv @ (eye - r * np.outer(y, s)) + r * np.outer(s, s)
        done = np.max(np.abs(s)) <= 1e-15 * max(1.0, float(np.max(np.abs(x)))) \
            or val - valn <= 1e-14 * max(1.0, abs(val))
        x, f, g, grad, jac, val, gl = xn, fn, gn, gradn, jacn, valn, gln
        if done:
            break
    return x, f, g, grad, jac


def minimize_auglag(problem: NlpProblem, x0, opts: SolverOptions = None, callback: Callback = None) -> SolveReport:
    opts = opts or SolverOptions(method="augmented-lagrangian")
    t0 = time.perf_counter()
    prob = _Counter(problem)
    lower, upper = problem.lower, problem.upper
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    f, g, grad, jac = prob.derivatives(x)
    lam = np.zeros(len(g))
    rho = 10.0
    report = SolveReport(Status.ITERATION_LIMIT, x, f, 0.0, 0.0, lam, 0, method="augmented-lagrangian")

    def record():
        report.objective_trajectory.append(float(f))
        report.violation_trajectory.append(max_violation(g, x, lower, upper))
        report.iterates.append(x.copy())

    record()
    status, message = Status.ITERATION_LIMIT, "iteration limit reached"
    k = 0
    prev_viol = np.inf
    prev_prev_viol = np.inf
    while True:
        viol = max_violation(g, x, lower, upper)
        # complementarity-consistent multipliers for the current point
        lam_now = np.where(g >= -opts.active_tolerance, lam, 0.0)
        kkt = stationarity_measure(grad, jac, g, lam_now, x, lower, upper)
        if callback:
            callback(k, x, f, viol)
        if viol <= opts.constraint_tolerance and kkt <= opts.kkt_tolerance:
            lam = lam_now
            status, message = Status.OPTIMAL, "first-order conditions satisfied"
            break
        if k >= opts.max_iterations:
            break
        # a saturated penalty that no longer reduces the violation means the
        # constraints cannot be met from here
        if rho >= RHO_MAX and viol > 0.99 * prev_prev_viol:
            status, message = Status.STALLED, "violation not reduced at maximum penalty"
            break
        inner_tol = max(0.1 * opts.kkt_tolerance, 1e-12)
        x, f, g, grad, jac = _projected_bfgs(prob, x, lam, rho, lower, upper, inner_tol, report.merit_steps)
        lam = np.maximum(0.0, lam + rho * g)
        viol = max_violation(g, x, lower, upper)
        if viol > 0.25 * prev_viol:
            rho = min(rho * 10.0, RHO_MAX)
        prev_prev_viol, prev_viol = prev_viol, viol
        k += 1
        record()

    report.status = status
    report.message = message
    report.x = x
    report.objective = float(f)
    report.max_violation = max_violation(g, x, lower, upper)
    lam_final = np.where(g >= -opts.active_tolerance, lam, 0.0)
    report.stationarity = stationarity_measure(grad, jac, g, lam_final, x, lower, upper)
    report.multipliers = lam_final
    report.iterations = k
    report.evaluations = prob.n
    report.wall_time = time.perf_counter() - t0
    return report
