"""Oracle baselines, two-stage refits and evaluation metrics.

The exhaustive procedures (ideal risk and canonical l0 selection) enumerate
every subset of columns and refuse to run beyond ``max_p`` columns.  Ties are
broken toward the smaller subset, then lexicographically on sorted indices.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .designs import SparseTruth, design_array
from .ds import DSOptions, solve_ds
from .estimate import Estimate
from .lasso import LassoOptions, solve_lasso_penalized
from .linalg import SingularSubsetError, as_vector, least_squares

__all__ = [
    "SubsetRisk",
    "Metrics",
    "ExhaustiveSearchRefused",
    "subset_prediction_risk",
    "ideal_risk",
    "ideal_bound",
    "canonical_selection",
    "gauss_dantzig",
    "gauss_lasso",
    "default_tau",
    "evaluate",
]

DEFAULT_MAX_P = 20
TAU_RTOL = 1e-3
SUPPORT_RTOL = 1e-8


class ExhaustiveSearchRefused(ValueError):
    """Raised when an exhaustive subset search would exceed the column cap."""


@dataclass(frozen=True)
class SubsetRisk:
    subset: tuple[int, ...]
    bias_sq: float
    variance: float

    @property
    def total(self) -> float:
        return self.bias_sq + self.variance


@dataclass(frozen=True)
class Metrics:
    rel_l2_error: float
    mse: float
    pred_error: float
    support_precision: float
    support_recall: float

    def to_dict(self) -> dict:
        return {
            "rel_l2_error": self.rel_l2_error,
            "mse": self.mse,
            "pred_error": self.pred_error,
            "support_precision": self.support_precision,
            "support_recall": self.support_recall,
        }


def _subsets(p: int):
    # smaller subsets first, lexicographic within a size: the first minimum
    # found is already the tie-break winner
    for k in range(p + 1):
        yield from itertools.combinations(range(p), k)


def _check_cap(p: int, max_p: int) -> None:
    if p > max_p:
        raise ExhaustiveSearchRefused(
            f"exhaustive search refused: p={p} exceeds the cap of {max_p} columns "
            f"({2 ** p} subsets)")


def _residual_sq(X, target, subset) -> float:
    if not subset:
        return float(target @ target)
    b = least_squares(X, target, subset)
    r = target - X @ b
    return float(r @ r)


def subset_prediction_risk(X, beta_true, sigma: float, subset) -> SubsetRisk:
    """Expected prediction error of least squares restricted to ``subset``.

    ``bias_sq`` is the squared distance from ``X beta`` to the span of the
    selected columns, ``variance`` is ``sigma^2 |I|``.  Raises
    :class:`~dantzig.linalg.SingularSubsetError` if the columns are dependent.
    """
    X = design_array(X)
    beta = as_vector(beta_true, "beta_true", X.shape[1])
    subset = tuple(sorted(int(i) for i in subset))
    mu = X @ beta
    return SubsetRisk(subset=subset, bias_sq=_residual_sq(X, mu, subset),
                      variance=float(sigma) ** 2 * len(subset))


def ideal_risk(X, beta_true, sigma: float, max_p: int = DEFAULT_MAX_P) -> tuple[float, tuple[int, ...]]:
    """Smallest subset prediction risk over all column subsets, and its subset.

    Singular subsets are skipped.
    """
    X = design_array(X)
    p = X.shape[1]
    _check_cap(p, max_p)
    beta = as_vector(beta_true, "beta_true", p)
    mu = X @ beta
    s2 = float(sigma) ** 2
    best, arg = math.inf, ()
    for subset in _subsets(p):
        var = s2 * len(subset)
        if var > best:
            # every remaining subset is at least this large
            break
        try:
            total = _residual_sq(X, mu, subset) + var
        except SingularSubsetError:
            continue
        if total < best:
            best, arg = total, subset
    return best, arg


def ideal_bound(beta_true, sigma: float) -> float:
    """``sigma^2 + sum_i min(beta_i^2, sigma^2)``."""
    beta = as_vector(beta_true, "beta_true")
    s2 = float(sigma) ** 2
    return s2 + float(np.sum(np.minimum(beta * beta, s2)))


def canonical_selection(X, y, sigma: float, Lambda_p: float, max_p: int = DEFAULT_MAX_P) -> Estimate:
    """Exhaustive minimizer of ``||y - X b||^2 + Lambda_p sigma^2 ||b||_0``.

    Each subset is fitted by least squares; singular subsets are skipped.
    """
    t0 = time.perf_counter()
    X = design_array(X)
    n, p = X.shape
    _check_cap(p, max_p)
    y = as_vector(y, "y", n)
    pen = float(Lambda_p) * float(sigma) ** 2
    best, arg, visited = math.inf, (), 0
    for subset in _subsets(p):
        if pen * len(subset) > best:
            break
        try:
            cost = _residual_sq(X, y, subset) + pen * len(subset)
        except SingularSubsetError:
            continue
        visited += 1
        if cost < best:
            best, arg = cost, subset
    beta = least_squares(X, y, arg) if arg else np.zeros(p)
    return Estimate(beta=beta, objective=best, feasibility_residual=0.0, solver="canonical",
                    iterations=visited, wall_ms=(time.perf_counter() - t0) * 1e3,
                    diagnostics={"subset": arg})


def default_tau(beta_stage1) -> float:
    return TAU_RTOL * max(1.0, float(np.max(np.abs(beta_stage1), initial=0.0)))


def _refit(X, y, stage1: Estimate, tau: float | None, solver: str, t0: float) -> Estimate:
    b1 = stage1.beta
    if tau is None:
        tau = default_tau(b1)
    selected = [int(i) for i in np.flatnonzero(np.abs(b1) > tau)]
    dropped = []
    beta = np.zeros(X.shape[1])
    while selected:
        try:
            beta = least_squares(X, y, selected)
            break
        except SingularSubsetError:
            # drop the weakest stage-1 coefficient and try again
            weakest = min(selected, key=lambda i: (abs(b1[i]), i))
            selected.remove(weakest)
            dropped.append(weakest)
    r = y - X @ beta
    return Estimate(beta=beta, objective=float(r @ r), feasibility_residual=stage1.feasibility_residual,
                    solver=solver, iterations=stage1.iterations, wall_ms=(time.perf_counter() - t0) * 1e3,
                    status=stage1.status,
                    diagnostics={"stage1": stage1, "tau": tau, "subset": tuple(selected), "dropped": dropped})


def gauss_dantzig(X, y, ds_opts: DSOptions, tau: float | None = None) -> Estimate:
    """Dantzig Selector for support selection, then least squares on the support.

    The support is ``{i : |beta_i| > tau}`` with ``tau`` defaulting to
    ``1e-3 * max(1, ||beta_stage1||_inf)``.  If the selected columns are
    dependent, the smallest stage-1 coefficients are dropped one at a time
    until the fit is well posed.  ``feasibility_residual`` reports stage 1.
    """
    t0 = time.perf_counter()
    Xa = design_array(X)
    y = as_vector(y, "y", Xa.shape[0])
    return _refit(Xa, y, solve_ds(Xa, y, ds_opts), tau, "gauss-dantzig", t0)


def gauss_lasso(X, y, lasso_opts: LassoOptions, tau: float | None = None) -> Estimate:
    """Same two-stage refit with the penalized Lasso as the first stage."""
    t0 = time.perf_counter()
    Xa = design_array(X)
    y = as_vector(y, "y", Xa.shape[0])
    return _refit(Xa, y, solve_lasso_penalized(Xa, y, lasso_opts), tau, "gauss-lasso", t0)


def evaluate(beta_hat, truth, X) -> Metrics:
    """Error and support metrics of an estimate against the planted truth.

    ``truth`` may be a :class:`~dantzig.designs.SparseTruth` or a plain
    vector.  When the truth is zero the relative error is 1 if the estimate
    has any nonzero entry and 0 otherwise.
    """
    Xa = design_array(X)
    beta = truth.beta if isinstance(truth, SparseTruth) else as_vector(truth, "truth")
    p = beta.shape[0]
    b = as_vector(beta_hat, "beta_hat", p)
    if Xa.shape[1] != p:
        raise ValueError(f"design has {Xa.shape[1]} columns, truth has length {p}")
    diff = b - beta
    thr = SUPPORT_RTOL * max(1.0, float(np.max(np.abs(b), initial=0.0)))
    est = set(np.flatnonzero(np.abs(b) > thr).tolist())
    true = set(np.flatnonzero(beta).tolist())
    norm_beta = float(np.linalg.norm(beta))
    if norm_beta > 0:
        rel = float(np.linalg.norm(diff)) / norm_beta
    else:
        rel = 1.0 if est else 0.0
    hits = len(est & true)
    precision = hits / len(est) if est else (1.0 if not true else 0.0)
    recall = hits / len(true) if true else (1.0 if not est else 0.0)
    pe = Xa @ diff
    return Metrics(rel_l2_error=rel, mse=float(diff @ diff) / p, pred_error=float(pe @ pe),
                   support_precision=precision, support_recall=recall)
