"""Test-only exhaustive LP reference.

Enumerates every basis of the standard-form system ``[A | I] (x, s) = b``
with ``x, s >= 0`` and returns the best basic feasible solution.  Only for
tiny problems (the number of bases is C(n + m, m)).
"""

import itertools

import numpy as np


def bfs_minimum(c, A, b, feas_tol=1e-9):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    full = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])
    best, arg = np.inf, None
    for basis in itertools.combinations(range(n + m), m):
        B = full[:, basis]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.min(xb) < -feas_tol * (1 + np.max(np.abs(b))):
            continue
        val = float(cost[list(basis)] @ xb)
        if val < best:
            best = val
            arg = np.zeros(n + m)
            arg[list(basis)] = xb
    return best, (None if arg is None else arg[:n])
