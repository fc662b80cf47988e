"""Design matrices and planted sparse coefficient vectors.

All generators are pure functions of their size arguments and an integer
seed.  Randomness comes from numpy's ``PCG64`` bit generator
(``np.random.default_rng(seed)``): uniforms use its 53-bit integer to double
mapping and normals use its ziggurat transform of those integers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import as_matrix

__all__ = [
    "DesignMatrix",
    "SparseTruth",
    "gen_gaussian",
    "gen_bernoulli",
    "gen_partial_fourier",
    "gen_identity_fourier",
    "gen_sparse_truth",
    "normalize_columns",
    "from_array",
    "design_array",
    "trig_dictionary",
    "trig_labels",
    "comb_null_vector",
    "parse_amplitude_rule",
]

KINDS = ("gaussian", "bernoulli", "partial_fourier", "identity_fourier", "file")
MIN_GAUSSIAN_AMPLITUDE = 1e-6


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    column_norms: np.ndarray
    kind: str
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        X = as_matrix(self.X)
        X.setflags(write=False)
        norms = np.asarray(self.column_norms, dtype=float)
        norms.setflags(write=False)
        if norms.shape != (X.shape[1],):
            raise ValueError("column_norms must have one entry per column")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_norms", norms)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SparseTruth:
    beta: np.ndarray
    support: tuple[int, ...]
    amplitude_rule: str = "gaussian_unit"

    @property
    def sparsity(self) -> int:
        return len(self.support)

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.beta)))


def design_array(X) -> np.ndarray:
    """The raw matrix of a :class:`DesignMatrix` or any 2-d array."""
    return X.X if isinstance(X, DesignMatrix) else as_matrix(X)


def _norms(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->j", X, X))


def from_array(X, kind: str = "file", seed: int | None = None, **meta) -> DesignMatrix:
    """Wrap an existing matrix, recording its column norms."""
    X = as_matrix(X)
    return DesignMatrix(X=X, column_norms=_norms(X), kind=kind, seed=seed, meta=dict(meta))


def _check_size(n: int, p: int) -> None:
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")


def gen_gaussian(n: int, p: int, seed: int) -> DesignMatrix:
    """i.i.d. N(0, 1/n) entries."""
    _check_size(n, p)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) / math.sqrt(n)
    return from_array(X, kind="gaussian", seed=seed)


def gen_bernoulli(n: int, p: int, seed: int) -> DesignMatrix:
    """Equiprobable +-1/sqrt(n) entries; every column has unit norm."""
    _check_size(n, p)
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(n, p)) * 2 - 1
    X = signs / math.sqrt(n)
    return from_array(X, kind="bernoulli", seed=seed)


def trig_labels(p: int) -> list[tuple[str, int]]:
    """Column labels ``(family, frequency)`` of the real trigonometric dictionary.

    Column 0 is the constant, followed by (cos, sin) pairs for frequencies
    1..floor((p-1)/2), then the Nyquist cosine when ``p`` is even.
    """
    labels = [("const", 0)]
    for f in range(1, (p - 1) // 2 + 1):
        labels.append(("cos", f))
        labels.append(("sin", f))
    if p % 2 == 0 and p > 1:
        labels.append(("cos", p // 2))
    return labels


def trig_dictionary(times, p: int) -> np.ndarray:
    """Unnormalized real trigonometric dictionary sampled at integer ``times``."""
    t = np.asarray(times, dtype=float)
    cols = []
    for family, f in trig_labels(p):
        if family == "const":
            cols.append(np.ones_like(t))
        elif family == "cos":
            cols.append(np.cos(2.0 * np.pi * f * t / p))
        else:
            cols.append(np.sin(2.0 * np.pi * f * t / p))
    return np.column_stack(cols)


def gen_partial_fourier(n: int, p: int, seed: int) -> DesignMatrix:
    """Trigonometric dictionary observed at ``n`` distinct random sample times.

    Real-valued stand-in for randomly sampled Fourier rows: the times are
    drawn without replacement from ``{0, ..., p-1}`` and each column is scaled
    to unit norm over the selected rows.
    """
    _check_size(n, p)
    if n > p:
        raise ValueError(f"partial Fourier design needs n <= p, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    times = np.sort(rng.choice(p, size=n, replace=False))
    raw = from_array(trig_dictionary(times, p), kind="partial_fourier", seed=seed,
                     times=[int(t) for t in times])
    return normalize_columns(raw)


def gen_identity_fourier(n: int) -> DesignMatrix:
    """The n x 2n spikes-and-sinusoids design ``[I_n | T_n]`` with unit columns."""
    if n < 4:
        raise ValueError(f"identity+Fourier design needs n >= 4, got {n}")
    T = trig_dictionary(np.arange(n), n)
    T = T / _norms(T)
    X = np.hstack([np.eye(n), T])
    return from_array(X, kind="identity_fourier", seed=None)


def comb_null_vector(n: int) -> np.ndarray:
    """Null vector of ``gen_identity_fourier(n).X`` built from a Dirac comb.

    For ``n = m*m`` the spike train at multiples of ``m`` has a spectrum
    supported on multiples of ``m``, so it is an exact linear combination of
    a handful of cosine columns.  The returned ``h`` (length ``2n``) puts the
    comb on the identity block and minus its cosine expansion on the
    trigonometric block, so ``X @ h == 0``.
    """
    m = math.isqrt(n)
    if m * m != n:
        raise ValueError(f"n must be a perfect square, got {n}")
    h = np.zeros(2 * n)
    h[np.arange(0, n, m)] = 1.0
    # comb(t) = (1/m) * sum_{j<m} exp(2 pi i j m t / n); fold conjugate pairs
    # onto real cosines and rescale by the column norms.
    for col, (family, f) in enumerate(trig_labels(n)):
        if family == "sin" or f % m:
            continue
        if family == "const":
            coef = math.sqrt(n) / m
        elif 2 * f == n:
            coef = math.sqrt(n) / m
        else:
            coef = 2.0 * math.sqrt(n / 2.0) / m
        h[n + col] = -coef
    return h


_SIGNED = re.compile(r"^signed_constant\(\s*([^)]+?)\s*\)$")


def parse_amplitude_rule(rule: str) -> tuple[str, float | None]:
    """Split an amplitude rule label into ``(name, constant)``."""
    if rule == "gaussian_unit":
        return "gaussian_unit", None
    m = _SIGNED.match(rule.strip())
    if m:
        a = float(m.group(1))
        if not a > 0 or not math.isfinite(a):
            raise ValueError(f"signed_constant amplitude must be positive, got {m.group(1)}")
        return "signed_constant", a
    raise ValueError(f"unknown amplitude rule {rule!r}")


def gen_sparse_truth(p: int, S: int, amplitude_rule: str, seed: int) -> SparseTruth:
    """Random S-sparse coefficient vector of length ``p``.

    ``gaussian_unit`` draws standard normal amplitudes (redrawing values below
    1e-6 in magnitude); ``signed_constant(a)`` draws equiprobable +-a.
    """
    if not 0 <= S <= p:
        raise ValueError(f"sparsity must satisfy 0 <= S <= p, got S={S}, p={p}")
    name, a = parse_amplitude_rule(amplitude_rule)
    rng = np.random.default_rng(seed)
    support = np.sort(rng.choice(p, size=S, replace=False))
    if name == "gaussian_unit":
        vals = rng.standard_normal(S)
        small = np.abs(vals) < MIN_GAUSSIAN_AMPLITUDE
        while np.any(small):
            vals[small] = rng.standard_normal(int(small.sum()))
            small = np.abs(vals) < MIN_GAUSSIAN_AMPLITUDE
    else:
        vals = a * (rng.integers(0, 2, size=S) * 2 - 1)
    beta = np.zeros(p)
    beta[support] = vals
    beta.setflags(write=False)
    return SparseTruth(beta=beta, support=tuple(int(i) for i in support), amplitude_rule=amplitude_rule)


def normalize_columns(D: DesignMatrix) -> DesignMatrix:
    """Scale every column to unit norm.

    The norms of the input are kept in ``column_norms`` (so per-column
    constraint levels can be set from them); normalizing twice leaves both
    the matrix and the recorded norms unchanged.
    """
    norms = _norms(D.X)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"column {int(zero[0])} is identically zero")
    if np.all(np.abs(norms - 1.0) <= 1e-12):
        return D
    meta = dict(D.meta)
    meta["normalized"] = True
    return replace(D, X=D.X / norms, column_norms=norms, meta=meta)
