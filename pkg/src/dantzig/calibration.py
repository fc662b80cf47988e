"""Monte Carlo choice of the constraint level.

The level is set so that the true coefficient vector is feasible for the
Dantzig constraint with a prescribed probability: with ``z ~ N(0, sigma^2 I)``
we want ``P(||X'z||_inf <= lambda_p * sigma) = quantile``.  The statistic
``M = ||X'z||_inf / sigma`` does not depend on sigma, so draws are made with
standard normal noise and the reported ``lambda_p`` is its empirical quantile.

Noise is generated in fixed-size blocks, block ``k`` from
``np.random.default_rng([seed, k])``, so a result depends only on
``(seed, draws)`` and not on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .designs import design_array

__all__ = [
    "CalibrationResult",
    "mc_lambda",
    "mc_lambda_per_column",
    "analytic_lambda_orthonormal",
    "max_correlation_draws",
]

BLOCK = 4096
MIN_DRAWS = 100
DEFAULT_QUANTILE = 0.95
DEFAULT_DRAWS = 100_000


@dataclass(frozen=True)
class CalibrationResult:
    lambda_p: float
    quantile: float
    draws: int
    sigma: float
    empirical_cdf_at_lambda: float
    per_column: np.ndarray | None = None

    @property
    def lambda_sigma(self) -> float:
        """The constraint level ``lambda_p * sigma`` for unit-norm columns."""
        return self.lambda_p * self.sigma

    @property
    def per_column_levels(self) -> np.ndarray | None:
        """Per-column constraint levels ``lambda_i * sigma``."""
        return None if self.per_column is None else self.per_column * self.sigma

    def to_dict(self) -> dict:
        d = {
            "lambda_p": self.lambda_p,
            "lambda_sigma": self.lambda_sigma,
            "quantile": self.quantile,
            "draws": self.draws,
            "sigma": self.sigma,
            "empirical_cdf_at_lambda": self.empirical_cdf_at_lambda,
        }
        if self.per_column is not None:
            d["per_column"] = [float(v) for v in self.per_column]
        return d


def _check(sigma, quantile, draws):
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 < quantile < 1.0:
        raise ValueError(f"quantile must lie strictly between 0 and 1, got {quantile}")
    if draws < MIN_DRAWS:
        raise ValueError(f"need at least {MIN_DRAWS} draws, got {draws}")
    # the order statistic must not be the sample maximum's ceiling overflow
    if math.ceil(quantile * draws) > draws:
        raise ValueError(f"quantile {quantile} is degenerate for {draws} draws")


def max_correlation_draws(X, draws: int, seed: int, scale=None) -> np.ndarray:
    """``max_i |(X'z)_i| / scale_i`` for ``draws`` standard normal vectors ``z``."""
    X = design_array(X)
    n, p = X.shape
    W = X if scale is None else X / np.asarray(scale, dtype=float)
    out = np.empty(draws)
    for k, start in enumerate(range(0, draws, BLOCK)):
        m = min(BLOCK, draws - start)
        # one row per draw, so draw j only depends on (seed, block, j)
        Z = np.random.default_rng([seed, k]).standard_normal((m, n))
        out[start:start + m] = np.max(np.abs(Z @ W), axis=1)
    return out


def _order_statistic(values: np.ndarray, quantile: float) -> float:
    k = math.ceil(quantile * values.size)
    return float(np.partition(values, k - 1)[k - 1])


def mc_lambda(X, sigma: float = 1.0, quantile: float = DEFAULT_QUANTILE,
              draws: int = DEFAULT_DRAWS, seed: int = 0) -> CalibrationResult:
    """Empirical ``quantile`` of ``||X'z||_inf / sigma`` over Gaussian draws.

    The quantile is the order statistic at ``ceil(quantile * draws)``.
    """
    _check(sigma, quantile, draws)
    M = max_correlation_draws(X, draws, seed)
    lam = _order_statistic(M, quantile)
    return CalibrationResult(lambda_p=lam, quantile=quantile, draws=draws, sigma=float(sigma),
                             empirical_cdf_at_lambda=float(np.mean(M <= lam)))


def mc_lambda_per_column(X, sigma: float = 1.0, quantile: float = DEFAULT_QUANTILE,
                         draws: int = DEFAULT_DRAWS, seed: int = 0) -> CalibrationResult:
    """Per-column levels ``lambda_i = kappa * ||X_i||`` for unnormalized designs.

    ``kappa`` is the empirical quantile of ``max_i |(X'z)_i| / (||X_i|| sigma)``,
    so that ``max_i |(X'z)_i| / (lambda_i sigma) <= 1`` with the requested
    probability.  ``lambda_p`` in the result is ``kappa``.
    """
    _check(sigma, quantile, draws)
    Xa = design_array(X)
    norms = np.sqrt(np.einsum("ij,ij->j", Xa, Xa))
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"column {int(zero[0])} is identically zero")
    R = max_correlation_draws(Xa, draws, seed, scale=norms)
    kappa = _order_statistic(R, quantile)
    return CalibrationResult(lambda_p=kappa, quantile=quantile, draws=draws, sigma=float(sigma),
                             empirical_cdf_at_lambda=float(np.mean(R <= kappa)),
                             per_column=kappa * norms)


def analytic_lambda_orthonormal(p: int, quantile: float) -> float:
    """Exact ``quantile`` of ``max_i |z_i|`` for ``p`` i.i.d. standard normals.

    ``P(max |z_i| <= t) = (2 Phi(t) - 1)^p``, inverted in closed form.
    """
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    if not 0.0 < quantile < 1.0 - 1e-12:
        raise ValueError(f"quantile must lie in (0, 1 - 1e-12), got {quantile}")
    return float(norm.ppf(0.5 * (1.0 + quantile ** (1.0 / p))))
