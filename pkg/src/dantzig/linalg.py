"""Dense linear algebra used by the solvers.

Matrices and vectors are plain float64 numpy arrays (C order).  The helpers
here add the shape/finiteness checks and the error types the rest of the
package relies on.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "NotPositiveDefiniteError",
    "SingularSubsetError",
    "as_matrix",
    "as_vector",
    "mat_vec",
    "mat_transpose_vec",
    "cholesky_spd",
    "cholesky_solve",
    "solve_spd",
    "least_squares",
    "read_matrix",
    "write_matrix",
    "format_matrix",
    "parse_matrix",
]

# pivot <= PIVOT_RTOL * max(diag(A)) is treated as a loss of definiteness
PIVOT_RTOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a symmetric factorization meets a non-positive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite (pivot {pivot}, value {value:.3e})")


class SingularSubsetError(ValueError):
    """The columns selected for a least-squares fit are linearly dependent."""

    def __init__(self, size: int):
        self.size = size
        super().__init__(f"singular subset: the {size} selected columns are rank deficient")


def as_matrix(X, name: str = "X") -> np.ndarray:
    A = np.ascontiguousarray(X, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def as_vector(v, name: str = "v", length: int | None = None) -> np.ndarray:
    a = np.ascontiguousarray(v, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {a.shape}")
    if length is not None and a.shape[0] != length:
        raise ValueError(f"{name} has length {a.shape[0]}, expected {length}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def mat_vec(X, v) -> np.ndarray:
    """Return ``X @ v``."""
    X = as_matrix(X)
    v = as_vector(v)
    if X.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: X is {X.shape}, v has length {v.shape[0]}")
    return X @ v


def mat_transpose_vec(X, v) -> np.ndarray:
    """Return ``X.T @ v``."""
    X = as_matrix(X)
    v = as_vector(v)
    if X.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: X is {X.shape}, v has length {v.shape[0]}")
    return X.T @ v


def _locate_bad_pivot(A: np.ndarray, threshold: float) -> tuple[int, float]:
    # Unblocked right-looking Cholesky, only used on the failure path to
    # report where definiteness is lost.
    W = np.array(A, dtype=float)
    n = W.shape[0]
    for k in range(n):
        d = W[k, k]
        if not d > threshold:
            return k, float(d)
        l = W[k + 1:, k] / np.sqrt(d)
        W[k + 1:, k + 1:] -= np.outer(l, l)
    return n - 1, float(W[n - 1, n - 1])


def cholesky_spd(A) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises :class:`NotPositiveDefiniteError` when a pivot falls below
    ``1e-12 * max(diag(A))``; the error carries the pivot index.
    """
    A = as_matrix(A, "A")
    n, m = A.shape
    if n != m:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if n == 0:
        return np.zeros((0, 0))
    scale = float(np.max(np.diag(A)))
    if not scale > 0:
        k = int(np.argmax(np.diag(A) <= 0))
        raise NotPositiveDefiniteError(k, float(A[k, k]))
    threshold = PIVOT_RTOL * scale
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        k, value = _locate_bad_pivot(A, threshold)
        raise NotPositiveDefiniteError(k, value) from None
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(~(pivots > threshold))
    if bad.size:
        k = int(bad[0])
        raise NotPositiveDefiniteError(k, float(pivots[k]))
    return L


def cholesky_solve(L: np.ndarray, b) -> np.ndarray:
    """Solve ``L L^T x = b`` given the lower factor ``L``."""
    z = solve_triangular(L, b, lower=True, check_finite=False)
    return solve_triangular(L.T, z, lower=False, check_finite=False)


def solve_spd(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Uses a Cholesky factorization followed by one round of iterative
    refinement.
    """
    A = as_matrix(A, "A")
    b = as_vector(b, "b")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has length {b.shape[0]}")
    L = cholesky_spd(A)
    x = cholesky_solve(L, b)
    x += cholesky_solve(L, b - A @ x)
    return x


def least_squares(X, y, support: Iterable[int]) -> np.ndarray:
    """Least-squares fit of ``y`` on the columns of ``X`` listed in ``support``.

    Returns a full-length coefficient vector that is zero off the support.
    Raises :class:`SingularSubsetError` if the selected columns are rank
    deficient.
    """
    X = as_matrix(X)
    y = as_vector(y, "y")
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"dimension mismatch: X is {X.shape}, y has length {y.shape[0]}")
    idx = np.array(sorted(set(int(i) for i in support)), dtype=int)
    beta = np.zeros(p)
    if idx.size == 0:
        return beta
    if idx[0] < 0 or idx[-1] >= p:
        raise IndexError(f"support indices must lie in [0, {p})")
    Xs = X[:, idx]
    G = Xs.T @ Xs
    rhs = Xs.T @ y
    try:
        L = cholesky_spd(G)
    except NotPositiveDefiniteError:
        raise SingularSubsetError(idx.size) from None
    coef = cholesky_solve(L, rhs)
    # one refinement step against the normal equations
    coef += cholesky_solve(L, rhs - G @ coef)
    beta[idx] = coef
    return beta


# -- text format ---------------------------------------------------------------
# "<rows> <cols>" header, then one line per row of space separated numbers.


def format_matrix(X) -> str:
    X = as_matrix(X)
    lines = [f"{X.shape[0]} {X.shape[1]}"]
    for row in X:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"bad header line: {lines[0]!r}")
    rows, cols = int(header[0]), int(header[1])
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} data rows, found {len(lines) - 1}")
    data = np.empty((rows, cols))
    for i, ln in enumerate(lines[1:]):
        fields = ln.split()
        if len(fields) != cols:
            raise ValueError(f"row {i} has {len(fields)} entries, expected {cols}")
        data[i] = [float(f) for f in fields]
    return as_matrix(data)


def write_matrix(path, X) -> None:
    Path(path).write_text(format_matrix(X), encoding="ascii")


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text(encoding="ascii"))
