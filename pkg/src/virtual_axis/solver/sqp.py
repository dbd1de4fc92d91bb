"""Dense SQP with damped BFGS and an L1 merit line search.

QP subproblems are reduced to least-distance programs and solved through
nonnegative least squares (Lawson & Hanson). When the linearized
constraints are inconsistent, an elastic variable relaxes them.
"""
from __future__ import annotations

import time

import numpy as np
from scipy.optimize import nnls

from .problem import (
    Callback,
    NlpProblem,
    SolveReport,
    SolverOptions,
    Status,
    estimate_multipliers,
    fd_hessian,
    max_violation,
    stationarity_measure,
)

ARMIJO = 1e-4
MIN_ALPHA = 1e-10


class InfeasibleQP(ValueError):
    pass


def solve_ldp(g: np.ndarray, h: np.ndarray):
    """``min ||u||  s.t.  g @ u <= h``. Returns ``(u, multipliers)``."""
    m, n = g.shape
    if m == 0:
        return np.zeros(n), np.zeros(0)
    # solve for u / sigma so the solution has norm O(1); the infeasibility
    # test on r[n] below is only meaningful at that scale
    gnorm = np.linalg.norm(g, axis=1)
    ratio = np.abs(h) / np.where(gnorm > 0.0, gnorm, np.inf)
    sigma = max(1.0, float(np.max(ratio, initial=0.0)))
    hs = h / sigma
    # rows scaled to unit norm; multipliers are scaled back at the end
    scale = np.linalg.norm(np.hstack([g, hs[:, None]]), axis=1)
    scale[scale == 0.0] = 1.0
    # Lawson-Hanson works with G u >= h
    gp, hp = -g / scale[:, None], -hs / scale
    e = np.vstack([gp.T, hp[None, :]])
    f = np.zeros(n + 1)
    f[n] = 1.0
    w, _ = nnls(e, f, maxiter=50 * (m + n + 1))
    r = e @ w - f
    if -r[n] <= 1e-10:
        raise InfeasibleQP("linearized constraints are inconsistent")
    u = -r[:n] / r[n]
    return sigma * u, sigma * w / (-r[n]) / scale


def solve_qp(b: np.ndarray, c: np.ndarray, a: np.ndarray, rhs: np.ndarray):
    """``min 1/2 d'Bd + c'd  s.t.  a d <= rhs`` for positive definite ``b``."""
    chol = np.linalg.cholesky(b)
    linv = np.linalg.inv(chol)
    w = linv @ c
    g = a @ linv.T
    h = rhs + g @ w
    u, lam = solve_ldp(g, h)
    return linv.T @ (u - w), lam


def _qp_rows(jac, gval, x, lower, upper):
    n = len(x)
    rows, rhs = [jac], [-gval]
    eye = np.eye(n)
    lo = np.isfinite(lower)
    hi = np.isfinite(upper)
    if lo.any():
        rows.append(-eye[lo])
        rhs.append(x[lo] - lower[lo])
    if hi.any():
        rows.append(eye[hi])
        rhs.append(upper[hi] - x[hi])
    return np.vstack(rows), np.concatenate(rhs)


def sqp_step(b, grad, jac, gval, x, lower, upper, weight=1.0):
    """Search direction and constraint multipliers.

    Inconsistent linearizations fall back to an elastic QP whose slack is
    charged ``weight`` per unit of violation.
    """
    m = len(gval)
    a, rhs = _qp_rows(jac, gval, x, lower, upper)
    try:
        d, lam = solve_qp(b, grad, a, rhs)
        return d, lam[:m], False
    except (InfeasibleQP, np.linalg.LinAlgError):
        pass
    # elastic mode: J d - t <= -g, t >= 0, penalized
    n = len(x)
    scale = max(1.0, float(np.max(np.abs(np.diag(b)))))
    b_el = np.zeros((n + 1, n + 1))
    b_el[:n, :n] = b
    b_el[n, n] = scale
    c_el = np.append(grad, weight)
    a_el = np.zeros((a.shape[0] + 1, n + 1))
    a_el[:-1, :n] = a
    a_el[:m, n] = -1.0
    a_el[-1, n] = -1.0
    rhs_el = np.append(rhs, 0.0)
    d, lam = solve_qp(b_el, c_el, a_el, rhs_el)
    return d[:n], lam[:m], True


def _l1(g):
    return float(np.sum(np.maximum(g, 0.0)))


def minimize_sqp(problem: NlpProblem, x0, opts: SolverOptions = None, callback: Callback = None) -> SolveReport:
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    lower, upper = problem.lower, problem.upper
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    f, gval, grad, jac = problem.derivatives(x)
    nevals = 1
    lam = estimate_multipliers(grad, jac, gval, opts.active_tolerance)
    b = None
    mu = 0.0
    report = SolveReport(Status.ITERATION_LIMIT, x, f, 0.0, 0.0, lam, 0, method="sqp")

    def record():
        report.objective_trajectory.append(float(f))
        report.violation_trajectory.append(max_violation(gval, x, lower, upper))
        report.iterates.append(x.copy())

    record()
    status = Status.ITERATION_LIMIT
    message = "iteration limit reached"
    k = 0
    while True:
        viol = max_violation(gval, x, lower, upper)
        kkt = stationarity_measure(grad, jac, gval, lam, x, lower, upper)
        if callback:
            callback(k, x, f, viol)
        if viol <= opts.constraint_tolerance and kkt <= opts.kkt_tolerance:
            status, message = Status.OPTIMAL, "first-order conditions satisfied"
            break
        if k >= opts.max_iterations:
            break
        if b is None:
            def grad_l(z, _lam=lam):
                _, _, gz, jz = problem.derivatives(z)
                return gz + jz.T @ _lam

            b = fd_hessian(grad_l, x)
            nevals += 2 * len(x)
        weight = 10.0 * max(1.0, mu, float(np.max(np.abs(grad), initial=0.0)))
        d, lam_qp, elastic = sqp_step(b, grad, jac, gval, x, lower, upper, weight)
        if np.max(np.abs(d)) <= opts.step_tolerance * max(1.0, float(np.max(np.abs(x)))):
            status, message = Status.STALLED, "search direction vanished"
            break
        mu = max(mu, 1.5 * float(np.max(lam_qp, initial=0.0)) + 1e-8)
        if elastic:
            mu = max(mu, weight)
        phi0 = f + mu * _l1(gval)
        slope = float(grad @ d) + mu * (_l1(gval + jac @ d) - _l1(gval))
        if slope >= 0.0:
            # quasi-Newton model disagrees with merit; restart curvature
            slope = -abs(slope) - 1e-16
        alpha = 1.0
        accepted = False
        while alpha >= MIN_ALPHA:
            xn = np.clip(x + alpha * d, lower, upper)
            fn, gn = problem.evaluate(xn)
            nevals += 1
            phin = fn + mu * _l1(gn)
            if phin <= phi0 + ARMIJO * alpha * slope or (phin < phi0 and alpha < 1e-3):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            status, message = Status.STALLED, "line search failed"
            break
        fn, gn, gradn, jacn = problem.derivatives(xn)
        nevals += 2 * len(x) + 1
        report.merit_steps.append((phi0, fn + mu * _l1(gn)))
        s = xn - x
        y = (gradn + jacn.T @ lam_qp) - (grad + jac.T @ lam_qp)
        b = _damped_bfgs(b, s, y)
        x, f, gval, grad, jac = xn, fn, gn, gradn, jacn
        lam = estimate_multipliers(grad, jac, gval, opts.active_tolerance)
        k += 1
        record()

    report.status = status
    report.message = message
    report.x = x
    report.objective = float(f)
    report.max_violation = max_violation(gval, x, lower, upper)
    report.stationarity = stationarity_measure(grad, jac, gval, lam, x, lower, upper)
    report.multipliers = lam
    report.iterations = k
    report.evaluations = nevals
    report.wall_time = time.perf_counter() - t0
    return report


def _damped_bfgs(b, s, y):
    bs = b @ s
    sbs = float(s @ bs)
    if sbs <= 0.0:
        return b
    sy = float(s @ y)
    if sy < 0.2 * sbs:
        theta = 0.8 * sbs / (sbs - sy)
        y = theta * y + (1.0 - theta) * bs
        sy = float(s @ y)
    bn = b - np.outer(bs, bs) / sbs + np.outer(y, y) / sy
    bn = 0.5 * (bn + bn.T)
    try:
        np.linalg.cholesky(bn)
    except np.linalg.LinAlgError:
        return b
    return bn
