"""The Dantzig Selector.

    minimize ||beta||_1   subject to   |X'(y - X beta)|_i <= level_i  for all i

with ``level_i = lambda_sigma`` for unit-norm columns, or per-column levels
otherwise.  The problem is written as an LP over ``beta = u - v`` with
``u, v >= 0`` and handed to :func:`dantzig.lp.ipm_solve`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .designs import design_array as _array
from .estimate import Estimate, SolverError
from .linalg import as_vector
from .lp import LPProblem, LPSolution, ipm_solve

__all__ = ["DSOptions", "assemble_ds_lp", "solve_ds", "check_feasibility", "constraint_levels"]

SNAP_RTOL = 1e-10


@dataclass(frozen=True)
class DSOptions:
    lambda_sigma: float
    per_column_lambda: np.ndarray | None = None
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iters: int = 100

    def __post_init__(self):
        if not self.lambda_sigma > 0 or not np.isfinite(self.lambda_sigma):
            raise ValueError(f"lambda_sigma must be positive, got {self.lambda_sigma}")
        if not (self.tol_gap > 0 and self.tol_feas > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.per_column_lambda is not None:
            levels = as_vector(self.per_column_lambda, "per_column_lambda")
            if not np.all(levels > 0):
                raise ValueError("per-column levels must all be positive")
            object.__setattr__(self, "per_column_lambda", levels)


def constraint_levels(opts: DSOptions, p: int) -> np.ndarray:
    if opts.per_column_lambda is None:
        return np.full(p, float(opts.lambda_sigma))
    if opts.per_column_lambda.shape[0] != p:
        raise ValueError(f"per_column_lambda has length {opts.per_column_lambda.shape[0]}, expected {p}")
    return opts.per_column_lambda


def _weights(opts: DSOptions, p: int) -> np.ndarray:
    # Per-column levels lambda_i*sigma = kappa*sigma*||X_i|| make the problem
    # equivalent to the unit-column one when |beta_i| is weighted by
    # level_i / lambda_sigma.
    if opts.per_column_lambda is None:
        return np.ones(p)
    return constraint_levels(opts, p) / opts.lambda_sigma


def assemble_ds_lp(X, y, opts: DSOptions) -> LPProblem:
    """Write the Dantzig Selector as ``min c'x, A x <= b, x >= 0``.

    ``x = (u, v)`` has ``2p`` entries; the ``2p`` rows are
    ``G(u - v) <= level + X'y`` and ``-G(u - v) <= level - X'y`` with
    ``G = X'X``.
    """
    X = _array(X)
    y = as_vector(y, "y")
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"dimension mismatch: X is {X.shape}, y has length {y.shape[0]}")
    levels = constraint_levels(opts, p)
    G = X.T @ X
    Xty = X.T @ y
    A = np.block([[G, -G], [-G, G]])
    b = np.concatenate([levels + Xty, levels - Xty])
    w = _weights(opts, p)
    return LPProblem(c=np.concatenate([w, w]), A=A, b=b, nonneg_count=2 * p)


def check_feasibility(X, y, beta, opts: DSOptions) -> float:
    """``max_i |X'(y - X beta)|_i - level_i``; nonpositive means feasible."""
    X = _array(X)
    r = as_vector(y, "y") - X @ as_vector(beta, "beta")
    return float(np.max(np.abs(X.T @ r) - constraint_levels(opts, X.shape[1])))


def solve_ds(X, y, opts: DSOptions) -> Estimate:
    """Dantzig Selector estimate via the interior-point LP solver.

    Entries below ``1e-10 * max(1, ||beta||_inf)`` are set to zero; the raw LP
    output is kept in ``diagnostics["raw_beta"]``.  Raises
    :class:`~dantzig.estimate.SolverError` if the LP solve does not converge.
    """
    t0 = time.perf_counter()
    Xa = _array(X)
    p = Xa.shape[1]
    lp = assemble_ds_lp(Xa, y, opts)
    # the LP residual is measured relative to 1 + ||b||_inf; tighten it so the
    # absolute constraint violation stays within tol_feas * (1 + level)
    level_floor = float(np.min(constraint_levels(opts, p)))
    bscale = 1.0 + float(np.max(np.abs(lp.b)))
    tol_feas = opts.tol_feas * (1.0 + level_floor) / bscale
    sol: LPSolution = ipm_solve(lp, tol_gap=opts.tol_gap, tol_feas=tol_feas, max_iters=opts.max_iters)
    wall_ms = (time.perf_counter() - t0) * 1e3
    raw = sol.x[:p] - sol.x[p:]
    diagnostics = {"raw_beta": raw, "lp": sol}
    if sol.status != "optimal":
        raise SolverError(f"Dantzig LP solve ended with status {sol.status} after {sol.iterations} iterations "
                          f"(gap={sol.gap:.2e}, primal_infeas={sol.primal_infeas:.2e}, "
                          f"dual_infeas={sol.dual_infeas:.2e})", sol.status, diagnostics)
    beta = raw.copy()
    beta[np.abs(beta) < SNAP_RTOL * max(1.0, float(np.max(np.abs(beta), initial=0.0)))] = 0.0
    return Estimate(
        beta=beta,
        objective=float(_weights(opts, p) @ np.abs(beta)),
        feasibility_residual=check_feasibility(Xa, y, beta, opts),
        solver="ds-ipm",
        iterations=sol.iterations,
        wall_ms=wall_ms,
        diagnostics=diagnostics,
    )
