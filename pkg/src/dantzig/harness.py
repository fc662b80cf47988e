"""Scenario runner: generate data, solve, evaluate, aggregate.

A scenario is a JSON document validated by :class:`Scenario`.  Replicate
``r`` derives all of its randomness from ``replicate_seed(seed_base, r)``, so
any replicate can be rerun on its own and the table does not depend on the
number of worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import designs
from .calibration import mc_lambda
from .ds import DSOptions, solve_ds
from .estimate import SolverError
from .lasso import LassoOptions, solve_lasso_constrained, solve_lasso_penalized
from .oracles import canonical_selection, evaluate, gauss_dantzig, gauss_lasso, ideal_bound

__all__ = [
    "Scenario",
    "ResultTable",
    "ConfigError",
    "CSV_COLUMNS",
    "METRIC_COLUMNS",
    "replicate_seed",
    "load_scenario",
    "run_scenario",
    "summarize",
    "write_csv",
    "read_csv",
    "format_csv",
]

CSV_COLUMNS = ("replicate", "method", "n", "p", "S", "sigma", "lambda", "rel_l2_error",
               "support_precision", "support_recall", "pred_error", "runtime_ms", "status")
METRIC_COLUMNS = ("rel_l2_error", "support_precision", "support_recall", "pred_error")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class ConfigError(ValueError):
    """Invalid scenario; the message names the offending key path."""


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def replicate_seed(seed_base: int, index: int) -> int:
    """Seed of replicate ``index``: one SplitMix64 step from ``base + index * golden``.

    The state update is injective in ``index`` (the increment is odd) and the
    output mixer is a bijection on 64-bit words, so distinct replicates of
    the same base always get distinct seeds.
    """
    if index < 0:
        raise ValueError(f"replicate index must be nonnegative, got {index}")
    return _splitmix64((int(seed_base) + int(index) * _GOLDEN) & _MASK64)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DesignSpec(_Strict):
    kind: Literal["gaussian", "bernoulli", "partial_fourier", "identity_fourier"] = "gaussian"
    n: int = Field(ge=1)
    p: int = Field(ge=1)
    seed: int = 0
    normalize: bool = True
    resample_design: bool = False


class SignalSpec(_Strict):
    sparsity: int = Field(ge=0)
    amplitude_rule: str = "gaussian_unit"


class NoiseSpec(_Strict):
    sigma: float = Field(ge=0.0)


class SolverSpec(_Strict):
    method: Literal["ds", "gds", "lasso", "lasso_constrained", "gauss_lasso", "canonical"]
    lambda_mode: Literal["fixed", "mc_quantile", "t_from_truth"] = "fixed"
    lambda_value: Optional[float] = Field(default=None, ge=0.0)
    quantile: float = Field(default=0.95, gt=0.0, lt=1.0)
    draws: int = Field(default=100_000, ge=100)
    tau: Optional[float] = Field(default=None, ge=0.0)
    tie_break: Literal["min_l1", "none"] = "min_l1"


class Scenario(_Strict):
    name: str = "scenario"
    design: DesignSpec
    signal: SignalSpec
    noise: NoiseSpec
    solver: SolverSpec
    replicates: int = Field(ge=1)
    seed_base: int = 0
    output_path: Optional[str] = None
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _consistent(self):
        d, s = self.design, self.solver
        if self.signal.sparsity > d.p:
            raise ValueError("signal.sparsity must not exceed design.p")
        designs.parse_amplitude_rule(self.signal.amplitude_rule)
        if d.kind == "identity_fourier" and d.p != 2 * d.n:
            raise ValueError("design.p must equal 2 * design.n for identity_fourier")
        if d.kind == "partial_fourier" and d.n > d.p:
            raise ValueError("design.n must not exceed design.p for partial_fourier")
        if s.lambda_mode == "t_from_truth" and s.method != "lasso_constrained":
            raise ValueError("solver.lambda_mode t_from_truth is only valid with lasso_constrained")
        if s.method == "lasso_constrained" and s.lambda_mode == "mc_quantile":
            raise ValueError("solver.lambda_mode mc_quantile is not valid with lasso_constrained")
        if s.method == "canonical" and s.lambda_mode != "fixed":
            raise ValueError("solver.lambda_mode must be fixed for canonical selection")
        if s.lambda_mode == "fixed" and s.lambda_value is None and s.method != "canonical":
            raise ValueError("solver.lambda_value is required when lambda_mode is fixed")
        if s.lambda_mode == "mc_quantile" and self.noise.sigma == 0:
            raise ValueError("solver.lambda_mode mc_quantile needs noise.sigma > 0")
        if s.method in ("ds", "gds") and s.lambda_mode == "fixed" and not s.lambda_value > 0:
            raise ValueError("solver.lambda_value must be positive for the Dantzig Selector")
        return self


def _config_error(exc: ValidationError) -> ConfigError:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(v) for v in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return ConfigError("; ".join(parts))


def load_scenario(source) -> Scenario:
    """Validate a scenario from a dict, a JSON string or a path to a JSON file."""
    if isinstance(source, Scenario):
        return source
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        try:
            source = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc}") from None
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    try:
        return Scenario.model_validate(source)
    except ValidationError as exc:
        raise _config_error(exc) from None


def _make_design(spec: DesignSpec, seed: int) -> designs.DesignMatrix:
    if spec.kind == "gaussian":
        D = designs.gen_gaussian(spec.n, spec.p, seed)
    elif spec.kind == "bernoulli":
        D = designs.gen_bernoulli(spec.n, spec.p, seed)
    elif spec.kind == "partial_fourier":
        D = designs.gen_partial_fourier(spec.n, spec.p, seed)
    else:
        D = designs.gen_identity_fourier(spec.n)
    return designs.normalize_columns(D) if spec.normalize else D


@dataclass
class _Setting:
    """Per-design quantities shared by replicates: the matrix and its level."""

    design: designs.DesignMatrix
    level: float | None
    lambda_p: float | None


def _prepare(sc: Scenario, design_seed: int) -> _Setting:
    D = _make_design(sc.design, design_seed)
    s = sc.solver
    sigma = sc.noise.sigma
    if s.lambda_mode == "mc_quantile":
        cal = mc_lambda(D, sigma=sigma, quantile=s.quantile, draws=s.draws, seed=design_seed)
        lam_p = cal.lambda_p
        return _Setting(D, lam_p * sigma, lam_p)
    if s.method == "canonical" and s.lambda_value is None:
        return _Setting(D, 2.0 * math.log(sc.design.p), None)
    if s.lambda_mode == "t_from_truth":
        return _Setting(D, None, None)
    lam_p = s.lambda_value / sigma if sigma > 0 and s.method in ("ds", "gds") else None
    return _Setting(D, s.lambda_value, lam_p)


def _solve(sc: Scenario, X, y, level: float):
    s = sc.solver
    if s.method == "ds":
        return solve_ds(X, y, DSOptions(lambda_sigma=level))
    if s.method == "gds":
        return gauss_dantzig(X, y, DSOptions(lambda_sigma=level), tau=s.tau)
    if s.method == "lasso":
        return solve_lasso_penalized(X, y, LassoOptions(lam=level))
    if s.method == "gauss_lasso":
        return gauss_lasso(X, y, LassoOptions(lam=level), tau=s.tau)
    if s.method == "lasso_constrained":
        return solve_lasso_constrained(X, y, LassoOptions(t_budget=level, tie_break=s.tie_break))
    return canonical_selection(X, y, sc.noise.sigma, level)


@dataclass
class ResultTable:
    rows: list[dict]
    summary: dict
    meta: dict = field(default_factory=dict)
    extras: list[dict] = field(default_factory=list, repr=False)


def _run_one(sc: Scenario, r: int, shared: _Setting | None) -> tuple[dict, dict]:
    seed = replicate_seed(sc.seed_base, r)
    setting = shared if shared is not None else _prepare(sc, replicate_seed(seed, 2))
    D = setting.design
    X = D.X
    truth = designs.gen_sparse_truth(D.p, sc.signal.sparsity, sc.signal.amplitude_rule, seed)
    sigma = sc.noise.sigma
    z = np.random.default_rng(replicate_seed(seed, 1)).standard_normal(D.n)
    y = X @ truth.beta + sigma * z
    level = truth.l1_norm if sc.solver.lambda_mode == "t_from_truth" else setting.level
    row = {"replicate": r, "method": sc.solver.method, "n": D.n, "p": D.p, "S": sc.signal.sparsity,
           "sigma": float(sigma), "lambda": float(level)}
    extra = {}
    t0 = time.perf_counter()
    try:
        est = _solve(sc, X, y, level)
        status = est.status
    except SolverError as exc:
        est, status = None, exc.status or "solver_error"
    row["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    if est is not None and status == "ok":
        m = evaluate(est.beta, truth, D)
        row.update(m.to_dict())
        del row["mse"]
        err_sq = float(np.sum((est.beta - truth.beta) ** 2))
        # empirical constants of the two error bounds: the Dantzig one in
        # units of lambda_p^2 times the ideal bound, the Lasso one in n sigma^2
        method = sc.solver.method
        if method in ("ds", "gds") and setting.lambda_p is not None and sigma > 0:
            extra["error_bound_C"] = err_sq / (setting.lambda_p ** 2 * ideal_bound(truth.beta, sigma))
        if method in ("lasso", "gauss_lasso", "lasso_constrained") and sigma > 0:
            extra["lasso_C"] = err_sq / (D.n * sigma ** 2)
    else:
        for k in METRIC_COLUMNS:
            row[k] = None
    row["status"] = status
    return {k: row[k] for k in CSV_COLUMNS}, extra


def _constants(extras: list[dict]) -> dict:
    out = {}
    for key in ("error_bound_C", "lasso_C"):
        vals = [e[key] for e in extras if key in e]
        if vals:
            out[key] = {"max": float(np.max(vals)), "median": float(_lower_median(vals)),
                        "mean": float(np.mean(vals))}
    return out


def _metadata(sc: Scenario) -> dict:
    return {
        "scenario": sc.model_dump(),
        "assumptions": {
            "design_kind": sc.design.kind,
            "normalized_columns": sc.design.normalize,
            "design_fixed_across_replicates": not sc.design.resample_design,
            "amplitude_rule": sc.signal.amplitude_rule,
            "sigma": sc.noise.sigma,
            "lambda_mode": sc.solver.lambda_mode,
            "constrained_lasso_tie_break": sc.solver.tie_break,
        },
        "rng": "numpy PCG64; replicate seeds by SplitMix64",
    }


def run_scenario(sc, threads: int | None = None, write: bool = True) -> ResultTable:
    """Run every replicate of ``sc`` and aggregate the results.

    Replicates run on ``threads`` worker threads (default ``sc.threads``);
    rows are always ordered by replicate index.  Solver failures are recorded
    in the row's ``status`` and never abort the run.  When ``sc.output_path``
    is set the CSV is written there and the summary JSON next to it.
    """
    sc = load_scenario(sc)
    workers = threads or sc.threads
    shared = None if sc.design.resample_design else _prepare(sc, sc.design.seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _run_one(sc, r, shared), range(sc.replicates)))
    else:
        results = [_run_one(sc, r, shared) for r in range(sc.replicates)]
    rows = [row for row, _ in results]
    extras = [e for _, e in results]
    try:
        summary = summarize(rows)
    except ValueError as exc:
        summary = {"error": str(exc), "ok_rows": 0, "rows": len(rows)}
    summary["constants"] = _constants(extras)
    if shared is not None and shared.lambda_p is not None:
        summary["lambda_p"] = shared.lambda_p
    table = ResultTable(rows=rows, summary=summary, meta=_metadata(sc), extras=extras)
    if write and sc.output_path:
        out = Path(sc.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv(out, rows)
        summary_path = out.with_suffix(".summary.json")
        summary_path.write_text(json.dumps({"summary": summary, "meta": table.meta}, indent=2, sort_keys=True) + "\n")
    return table


def _lower_median(values) -> float:
    v = sorted(values)
    return v[(len(v) - 1) // 2]


def summarize(rows) -> dict:
    """Median (lower of the two middle values), mean and sample std per metric.

    Only rows with ``status == "ok"`` count.  A single ok row gets std 0 and
    ``single_row: true``.
    """
    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        raise ValueError("no successful replicates")
    out = {"rows": len(rows), "ok_rows": len(ok), "single_row": len(ok) == 1, "metrics": {}}
    for key in METRIC_COLUMNS:
        vals = np.array([float(r[key]) for r in ok])
        out["metrics"][key] = {
            "median": float(_lower_median(vals)),
            "mean": float(np.mean(vals)),
            "std": float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0,
        }
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_cell(row[k]) for k in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(path, rows) -> None:
    Path(path).write_text(format_csv(rows))


_INT_COLUMNS = {"replicate", "n", "p", "S"}
_STR_COLUMNS = {"method", "status"}


def read_csv(path) -> list[dict]:
    """Read a results CSV back into typed rows (empty cells become ``None``)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        rows = []
        for raw in reader:
            row = {}
            for k, v in raw.items():
                if k in _STR_COLUMNS:
                    row[k] = v
                elif v == "":
                    row[k] = None
                elif k in _INT_COLUMNS:
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows
