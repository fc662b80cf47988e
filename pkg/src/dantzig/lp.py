"""Primal-dual interior-point solver for dense inequality-form LPs.

Problems are ``min c'x  s.t.  A x <= b``, with the first ``nonneg_count``
variables constrained to be nonnegative and the rest free.  Internally every
inequality gets a slack ``s >= 0`` and every free variable is split in two, so
the iteration works on

    A x + s = b,   A'y - z + c = 0,   x.z = 0,   s.y = 0,   x, s, y, z >= 0,

where ``y`` are the (nonnegative) multipliers of the inequalities and ``z``
the reduced costs.  Each Newton system is eliminated down to a symmetric
positive definite normal equation, either in the ``m`` constraint rows
(``A D_x A' + S/Y``) or in the variables (``A' (Y/S) A + Z/X``), whichever is
smaller (the variable form on ties).  At degenerate optima the normal matrix
can become numerically singular; those iterations fall back to an LU solve of
the unreduced augmented system.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import NotPositiveDefiniteError, as_matrix, as_vector, cholesky_solve, cholesky_spd

__all__ = ["LPProblem", "LPSolution", "ipm_solve"]

log = logging.getLogger(__name__)

STEP_FRACTION = 0.99
START_CLAMP = 1.0
MAX_FACTOR_FAILURES = 3
# polishing stops once the relative gap reaches this floor
POLISH_FLOOR = 1e-14
# default number of extra steps taken after convergence
POLISH_ITERS = 4
_DIVERGENCE = 1e10


@dataclass(frozen=True)
class LPProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    nonneg_count: int | None = None

    def __post_init__(self):
        c = as_vector(self.c, "c")
        A = as_matrix(self.A, "A")
        b = as_vector(self.b, "b")
        if A.shape != (b.shape[0], c.shape[0]):
            raise ValueError(f"inconsistent LP: A is {A.shape}, b has {b.shape[0]} rows, c has {c.shape[0]} entries")
        k = c.shape[0] if self.nonneg_count is None else int(self.nonneg_count)
        if not 0 <= k <= c.shape[0]:
            raise ValueError(f"nonneg_count must lie in [0, {c.shape[0]}], got {k}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "nonneg_count", k)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LPSolution:
    x: np.ndarray
    dual: np.ndarray
    objective: float
    gap: float
    primal_infeas: float
    dual_infeas: float
    iterations: int
    status: str
    slack: np.ndarray | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


class SingularSystemError(np.linalg.LinAlgError):
    """The augmented Newton system could not be factored."""


class _NormalSystem:
    """Cholesky factor of the Jacobi-scaled normal matrix."""

    def __init__(self, M: np.ndarray):
        d = 1.0 / np.sqrt(np.diag(M))
        self.Ms = M * d[:, None] * d[None, :]
        self.d = d
        self.L = cholesky_spd(self.Ms)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        r = rhs * self.d
        u = cholesky_solve(self.L, r)
        u += cholesky_solve(self.L, r - self.Ms @ u)
        return u * self.d


class _AugmentedSystem:
    """LU factor of the symmetric indefinite system ``[[Z/X, A'], [A, -S/Y]]``.

    Used when the normal matrix is numerically singular, which happens at
    degenerate optima.  Working with the unreduced system avoids dividing by
    the vanishing members of each complementary pair.
    """

    def __init__(self, A, dxz, dsy):
        m, nx = A.shape
        K = np.empty((nx + m, nx + m))
        K[:nx, :nx] = np.diag(dxz)
        K[:nx, nx:] = A.T
        K[nx:, :nx] = A
        K[nx:, nx:] = -np.diag(dsy)
        # symmetric equilibration by the largest entry of each row
        d = 1.0 / np.sqrt(np.max(np.abs(K), axis=1))
        self.K = K
        self.Ks = K * d[:, None] * d[None, :]
        self.d = d
        self.nx = nx
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            try:
                self.lu = scipy.linalg.lu_factor(self.Ks, check_finite=True)
            except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
                raise SingularSystemError(f"augmented system is singular ({exc})") from None
        piv = np.abs(np.diag(self.lu[0]))
        if not np.all(piv > np.finfo(float).eps * piv.max()):
            raise SingularSystemError("augmented system is singular")

    def solve(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        r = np.concatenate([r1, r2]) * self.d
        u = scipy.linalg.lu_solve(self.lu, r)
        u += scipy.linalg.lu_solve(self.lu, r - self.Ks @ u)
        u *= self.d
        return u[:self.nx], u[self.nx:]


def _starting_point(A, b, c):
    # least-squares primal/dual estimates, then clamp away from the boundary
    m = A.shape[0]
    K = A @ A.T + np.eye(m)
    L = cholesky_spd(K)
    w = cholesky_solve(L, b)
    x = A.T @ w
    s = w.copy()
    y = -cholesky_solve(L, A @ c)
    z = c + A.T @ y
    return (np.maximum(x, START_CLAMP), np.maximum(s, START_CLAMP),
            np.maximum(y, START_CLAMP), np.maximum(z, START_CLAMP))


def ipm_solve(lp: LPProblem, tol_gap: float = 1e-8, tol_feas: float = 1e-8,
              max_iters: int = 100, polish_iters: int = POLISH_ITERS) -> LPSolution:
    """Solve ``lp`` with an infeasible-start Mehrotra predictor-corrector method.

    Termination (status ``"optimal"``) requires

    * ``|c'x + b'y| <= tol_gap * (1 + |c'x|)``
    * ``||b - A x - s||_inf / (1 + ||b||_inf) <= tol_feas``
    * ``||c + A'y - z||_inf / (1 + ||c||_inf) <= tol_feas``

    Other statuses: ``"max_iters"``, ``"numerical_failure"`` (three
    consecutive iterations where both the normal matrix and the augmented
    system fail to factor), ``"infeasible"`` / ``"unbounded"``
    (iterates diverge along a Farkas certificate).

    With ``polish_iters > 0`` the method keeps iterating for up to that many
    steps after the tolerances are met and returns the converged iterate with
    the smallest gap.  Interior points sit about ``gap / n`` away from the
    optimal face, so this drives would-be zeros toward exact zeros.
    """
    if tol_gap <= 0 or tol_feas <= 0:
        raise ValueError("tolerances must be positive")
    m, nv = lp.shape
    k = lp.nonneg_count
    A = np.hstack([lp.A, -lp.A[:, k:]]) if k < nv else lp.A
    c = np.concatenate([lp.c, -lp.c[k:]]) if k < nv else lp.c
    b = lp.b
    nx = A.shape[1]
    bnorm = 1.0 + float(np.max(np.abs(b), initial=0.0))
    cnorm = 1.0 + float(np.max(np.abs(c), initial=0.0))
    # ties go to the variable form: the row form is singular in the limit
    # whenever A is row-rank deficient, as it is for the Dantzig LP
    row_form = m < nx

    x, s, y, z = _starting_point(A, b, c)
    failures = 0
    status = "max_iters"
    history = []
    best = None
    polish_left = polish_iters
    it = 0
    while True:
        rp = b - A @ x - s
        rd = c + A.T @ y - z
        pobj = float(c @ x)
        dobj = float(-b @ y)
        gap = abs(pobj - dobj)
        pinf = float(np.max(np.abs(rp), initial=0.0)) / bnorm
        dinf = float(np.max(np.abs(rd), initial=0.0)) / cnorm
        history.append((pobj, dobj, pinf, dinf))
        if gap <= tol_gap * (1.0 + abs(pobj)) and pinf <= tol_feas and dinf <= tol_feas:
            if best is None or gap < best[4]:
                best = (x, s, y, z, gap, pinf, dinf)
            if polish_left <= 0 or gap <= POLISH_FLOOR * (1.0 + abs(pobj)):
                break
            polish_left -= 1
        elif best is not None:
            # polishing lost feasibility; fall back to the converged iterate
            break
        cert = _divergence_status(A, b, c, x, y)
        if cert:
            status = cert
            break
        if it >= max_iters:
            break

        mu = (x @ z + s @ y) / (nx + m)
        if row_form:
            M = (A * (x / z)) @ A.T
            M[np.diag_indices(m)] += s / y
        else:
            M = A.T @ (A * (y / s)[:, None])
            M[np.diag_indices(nx)] += z / x
        system = aug = None
        try:
            system = _NormalSystem(M)
        except NotPositiveDefiniteError as exc:
            log.debug("normal matrix factorization failed (%s); using the augmented system", exc)
            try:
                aug = _AugmentedSystem(A, z / x, s / y)
            except SingularSystemError as exc2:
                failures += 1
                log.debug("augmented factorization failed (%s), %d in a row", exc2, failures)
                if failures >= MAX_FACTOR_FAILURES:
                    status = "numerical_failure"
                    break
                # nudge the iterate toward the central path and retry
                x, s, y, z = _recenter(x, s, y, z, mu)
                it += 1
                continue
        failures = 0

        def direction(rxz, rsy):
            if aug is not None:
                # complementarity supplies dz and ds: accurate where x >> z
                # and y >> s, exactly the pairs that make M singular
                dx, dy = aug.solve(-rd + rxz / x, rp - rsy / y)
                return dx, (rsy - s * dy) / y, dy, (rxz - z * dx) / x
            # ds and dz come from the two linear feasibility equations, so
            # solve errors land in the complementarity products, which the
            # next iterate recenters
            if row_form:
                dy = system.solve(-rp - A @ (x / z * rd) + A @ (rxz / z) + rsy / y)
                dx = (x / z) * (-rd - A.T @ dy) + rxz / z
            else:
                dx = system.solve(-rd - A.T @ (rsy / s) + A.T @ (y / s * rp) + rxz / x)
                dy = (rsy - y * (rp - A @ dx)) / s
            return dx, rp - A @ dx, dy, A.T @ dy + rd

        # predictor
        dx, ds, dy, dz = direction(-x * z, -s * y)
        ap = min(1.0, _max_step(x, dx), _max_step(s, ds))
        ad = min(1.0, _max_step(z, dz), _max_step(y, dy))
        mu_aff = ((x + ap * dx) @ (z + ad * dz) + (s + ap * ds) @ (y + ad * dy)) / (nx + m)
        sigma = (mu_aff / mu) ** 3

        # corrector
        dx, ds, dy, dz = direction(sigma * mu - x * z - dx * dz, sigma * mu - s * y - ds * dy)
        ap = min(1.0, STEP_FRACTION * min(_max_step(x, dx), _max_step(s, ds)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(z, dz), _max_step(y, dy)))
        x = x + ap * dx
        s = s + ap * ds
        y = y + ad * dy
        z = z + ad * dz
        it += 1

    if best is not None:
        x, s, y, z, gap, pinf, dinf = best
        status = "optimal"
    if k < nv:
        xo = x[:nv].copy()
        xo[k:] -= x[nv:]
    else:
        xo = x
    return LPSolution(x=xo, dual=y, objective=float(lp.c @ xo), gap=gap, primal_infeas=pinf,
                      dual_infeas=dinf, iterations=it, status=status, slack=s, history=history)


def _recenter(x, s, y, z, mu):
    # scale up both members of every pair whose product fell below mu / 10
    floor = 0.1 * mu
    kx = np.sqrt(np.maximum(floor / (x * z), 1.0))
    ks = np.sqrt(np.maximum(floor / (s * y), 1.0))
    return x * kx, s * ks, y * ks, z * kx


def _divergence_status(A, b, c, x, y) -> str | None:
    # A blown-up dual ray with b'y < 0, A'y >= 0 certifies primal
    # infeasibility; a blown-up primal ray with c'x < 0, A x <= 0 certifies
    # unboundedness.
    ymax = float(np.max(y, initial=0.0))
    if ymax > _DIVERGENCE * (1.0 + float(np.max(np.abs(c), initial=0.0))):
        u = y / ymax
        if b @ u < -1e-8 and np.min(A.T @ u, initial=0.0) > -1e-8:
            return "infeasible"
    xmax = float(np.max(x, initial=0.0))
    if xmax > _DIVERGENCE * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        u = x / xmax
        if c @ u < -1e-8 and np.max(A @ u, initial=0.0) < 1e-8:
            return "unbounded"
    return None
