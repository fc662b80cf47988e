"""Lasso comparators.

Two forms are provided: the penalized problem

    minimize 1/2 ||y - X b||^2 + lam * ||b||_1

solved by cyclic coordinate descent, and the budget-constrained problem

    minimize 1/2 ||y - X b||^2   subject to   ||b||_1 <= t

solved by accelerated projected gradient over the l1 ball.  When the ball
contains several least-squares solutions (always the case for p > n and a
large enough budget) the constrained minimizer is not unique; by default the
one with the smallest l1 norm is returned, which is where the Lasso path ends.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .designs import design_array
from .estimate import Estimate
from .linalg import as_vector

__all__ = [
    "LassoOptions",
    "soft_threshold",
    "project_l1_ball",
    "solve_lasso_penalized",
    "solve_lasso_constrained",
    "lasso_kkt_residual",
]

KKT_TOL = 1e-6
# level of the near-zero Dantzig problem used for the minimum-l1 tie-break,
# relative to ||X'y||_inf
TIE_BREAK_LEVEL = 1e-9
TIE_BREAKS = ("min_l1", "none")
# successive sweeps with small relative decrease before stopping
PATIENCE = 5
# objective decreases are measured relative to max(f, OBJ_FLOOR * f(0)) so an
# exactly fitting optimum (f* = 0) still terminates
OBJ_FLOOR = 1e-12


@dataclass(frozen=True)
class LassoOptions:
    lam: float | None = None
    t_budget: float | None = None
    tol: float = 1e-8
    max_iters: int = 10000
    tie_break: str = "min_l1"

    def __post_init__(self):
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {self.tie_break!r}")
        if (self.lam is None) == (self.t_budget is None):
            raise ValueError("set exactly one of lam and t_budget")
        value = self.lam if self.lam is not None else self.t_budget
        if not (value >= 0 and math.isfinite(value)):
            raise ValueError(f"regularization level must be finite and nonnegative, got {value}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def project_l1_ball(v, t: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x : ||x||_1 <= t}`` (sort-based)."""
    v = as_vector(v, "v")
    if t < 0:
        raise ValueError(f"radius must be nonnegative, got {t}")
    a = np.abs(v)
    if a.sum() <= t:
        return v.copy()
    if t == 0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = int(np.flatnonzero(u * j > css - t)[-1]) + 1
    theta = (css[rho - 1] - t) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def lasso_kkt_residual(X, y, beta, lam: float) -> float:
    """Largest violation of the penalized-Lasso optimality conditions."""
    X = design_array(X)
    g = X.T @ (y - X @ beta)
    nz = beta != 0
    viol = np.where(nz, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.max(viol, initial=0.0))


def _rel_decrease(f_old: float, f_new: float, f_start: float) -> float:
    return (f_old - f_new) / max(abs(f_old), OBJ_FLOOR * abs(f_start), np.finfo(float).tiny)


def _objective(r, beta, lam):
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(beta)))


def solve_lasso_penalized(X, y, opts: LassoOptions) -> Estimate:
    """Penalized Lasso by cyclic coordinate descent.

    Stops once the relative objective decrease has stayed below ``opts.tol``
    for five consecutive sweeps and the KKT residual is within
    ``1e-6 * (1 + lam)``.  Hitting ``max_iters`` returns the current iterate
    with ``status="max_iters"``.
    """
    if opts.lam is None:
        raise ValueError("penalized Lasso needs opts.lam")
    t0 = time.perf_counter()
    X = design_array(X)
    y = as_vector(y, "y")
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"dimension mismatch: X is {X.shape}, y has length {y.shape[0]}")
    lam = float(opts.lam)
    G = X.T @ X
    col_sq = np.diag(G).copy()
    beta = np.zeros(p)
    corr = X.T @ y  # X'r, kept current through Gram updates
    r = y.copy()
    f = _objective(r, beta, lam)
    history = [f]
    kkt_tol = KKT_TOL * (1.0 + lam)
    quiet = 0
    status = "max_iters"
    sweeps = 0
    kkt = lasso_kkt_residual(X, y, beta, lam)
    while sweeps < opts.max_iters:
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = corr[j] + col_sq[j] * old
            new = math.copysign(max(abs(rho) - lam, 0.0), rho) / col_sq[j]
            if new != old:
                corr -= G[:, j] * (new - old)
                beta[j] = new
        sweeps += 1
        r = y - X @ beta
        corr = X.T @ r  # resync against drift from the rank-one updates
        f_new = _objective(r, beta, lam)
        history.append(f_new)
        decrease = _rel_decrease(f, f_new, history[0])
        quiet = quiet + 1 if decrease < opts.tol else 0
        f = f_new
        if quiet >= PATIENCE:
            kkt = lasso_kkt_residual(X, y, beta, lam)
            if kkt <= kkt_tol:
                status = "ok"
                break
    else:
        kkt = lasso_kkt_residual(X, y, beta, lam)
    return Estimate(
        beta=beta,
        objective=f,
        feasibility_residual=kkt,
        solver="lasso-cd",
        iterations=sweeps,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        status=status,
        diagnostics={"objective_history": history},
    )


def _gram_norm_bound(X, iters: int = 500, rtol: float = 1e-10) -> float:
    # power iteration on X'X from a fixed pseudo-random start
    p = X.shape[1]
    v = np.random.default_rng(0).standard_normal(p)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = X.T @ (X @ v)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(nrm - est) <= rtol * nrm:
            est = nrm
            break
        est = nrm
    return est


def _min_l1_least_squares(X, y):
    # min ||b||_1 over (numerically) least-squares solutions: the Dantzig
    # Selector at a vanishing constraint level
    from .ds import DSOptions, solve_ds

    scale = float(np.max(np.abs(X.T @ y), initial=0.0))
    if scale == 0.0:
        return np.zeros(X.shape[1]), 0
    est = solve_ds(X, y, DSOptions(lambda_sigma=TIE_BREAK_LEVEL * scale))
    return est.beta, est.iterations


def solve_lasso_constrained(X, y, opts: LassoOptions) -> Estimate:
    """Least squares over the l1 ball of radius ``opts.t_budget``.

    With ``tie_break="min_l1"`` (default) the minimum-l1 least-squares
    solution is computed first; if it fits in the budget it is a minimizer
    and is returned (``diagnostics["path"] = "min_l1"``).  Otherwise, and
    always with ``tie_break="none"``, the problem is solved by accelerated
    projected gradient from zero with step ``1/L``, where ``L`` is a power
    iteration estimate of the top eigenvalue of ``X'X`` inflated by 1%.
    Momentum is reset whenever the objective goes up.  Converged when the
    relative objective decrease stays below ``opts.tol`` for five consecutive
    iterations and the gradient mapping is within ``1e-6 * (1 + ||X'y||_inf)``.
    """
    if opts.t_budget is None:
        raise ValueError("constrained Lasso needs opts.t_budget")
    t0 = time.perf_counter()
    X = design_array(X)
    y = as_vector(y, "y")
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"dimension mismatch: X is {X.shape}, y has length {y.shape[0]}")
    t = float(opts.t_budget)
    if opts.tie_break == "min_l1" and t > 0.0:
        b0, lp_iters = _min_l1_least_squares(X, y)
        l1 = float(np.sum(np.abs(b0)))
        if l1 <= t:
            r = y - X @ b0
            return Estimate(beta=b0, objective=0.5 * float(r @ r), feasibility_residual=l1 - t,
                            solver="lasso-pg", iterations=lp_iters,
                            wall_ms=(time.perf_counter() - t0) * 1e3,
                            diagnostics={"path": "min_l1", "objective_history": []})
    beta = np.zeros(p)
    r = y.copy()
    f = 0.5 * float(r @ r)
    history = [f]
    L = 1.01 * _gram_norm_bound(X)
    if t == 0.0 or L == 0.0:
        return Estimate(beta=beta, objective=f, feasibility_residual=-t, solver="lasso-pg",
                        iterations=0, wall_ms=(time.perf_counter() - t0) * 1e3,
                        diagnostics={"path": "projected_gradient", "objective_history": history,
                                     "lipschitz": L})
    gm_tol = KKT_TOL * (1.0 + float(np.max(np.abs(X.T @ y))))
    w = beta.copy()
    mom = 1.0
    quiet = 0
    status = "max_iters"
    it = 0
    while it < opts.max_iters:
        it += 1
        cand = project_l1_ball(w - X.T @ (X @ w - y) / L, t)
        rc = y - X @ cand
        fc = 0.5 * float(rc @ rc)
        if fc > f:
            # restart from the last accepted point with a plain projected step
            mom = 1.0
            cand = project_l1_ball(beta - X.T @ (X @ beta - y) / L, t)
            rc = y - X @ cand
            fc = 0.5 * float(rc @ rc)
        mom_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * mom * mom))
        w = cand + ((mom - 1.0) / mom_next) * (cand - beta)
        mom = mom_next
        decrease = _rel_decrease(f, fc, history[0])
        beta, f = cand, fc
        history.append(f)
        quiet = quiet + 1 if decrease < opts.tol else 0
        if quiet >= PATIENCE:
            step = beta - project_l1_ball(beta + X.T @ (y - X @ beta) / L, t)
            if L * float(np.max(np.abs(step))) <= gm_tol:
                status = "ok"
                break
    l1 = float(np.sum(np.abs(beta)))
    if l1 > t:
        beta *= t / l1
        l1 = float(np.sum(np.abs(beta)))
    return Estimate(
        beta=beta,
        objective=f,
        feasibility_residual=l1 - t,
        solver="lasso-pg",
        iterations=it,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        status=status,
        diagnostics={"path": "projected_gradient", "objective_history": history, "lipschitz": L},
    )
