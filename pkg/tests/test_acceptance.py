"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` (the lines are also
collected into the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import conftest
from conftest import random_orthonormal
from lp_reference import bfs_minimum

from dantzig.calibration import analytic_lambda_orthonormal, mc_lambda
from dantzig.designs import (
    comb_null_vector,
    gen_gaussian,
    gen_identity_fourier,
    gen_sparse_truth,
    normalize_columns,
)
from dantzig.ds import DSOptions, assemble_ds_lp, check_feasibility, solve_ds
from dantzig.harness import CSV_COLUMNS, load_scenario, run_scenario
from dantzig.lasso import soft_threshold
from dantzig.lp import ipm_solve
from dantzig.oracles import canonical_selection, evaluate, gauss_dantzig, ideal_bound, ideal_risk

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _report(number, title, ok, detail):
    label = f"criterion {number:>2}" if isinstance(number, int) else number
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {title}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _scenario(name, **over):
    data = json.loads((SCENARIOS / name).read_text())
    data.update(over)
    return load_scenario(data)


def test_01_orthonormal_soft_threshold():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(1, 51))
        n = p + int(rng.integers(0, 11))
        X = random_orthonormal(rng, n, p)
        y = rng.standard_normal(n) * float(rng.uniform(0.5, 4))
        lam = float(rng.uniform(0.1, 3))
        est = solve_ds(X, y, DSOptions(lam))
        worst = max(worst, float(np.max(np.abs(est.beta - soft_threshold(X.T @ y, lam)))))
    ok = worst <= 1e-6
    _report(1, "orthonormal soft-threshold equivalence", ok, f"max l_inf deviation {worst:.2e} (<= 1e-6)")
    assert ok


def test_02_zero_rule():
    rng = np.random.default_rng(202)
    zero_worst, nonzero_min = 0.0, math.inf
    for k in range(200):
        n = int(rng.integers(5, 30))
        p = int(rng.integers(2, 60))
        X = normalize_columns(gen_gaussian(n, p, 5000 + k)).X
        y = rng.standard_normal(n)
        top = float(np.max(np.abs(X.T @ y)))
        if k < 100:
            # ||X'y||_inf <= lambda sigma, including the boundary itself
            lam = top if k % 10 == 0 else top * float(rng.uniform(1.0, 3.0))
            zero_worst = max(zero_worst, float(np.max(np.abs(solve_ds(X, y, DSOptions(lam)).beta))))
        else:
            lam = top * float(rng.uniform(0.05, 0.95))
            nonzero_min = min(nonzero_min, float(np.max(np.abs(solve_ds(X, y, DSOptions(lam)).beta))))
    ok = zero_worst <= 1e-8 and nonzero_min > 1e-8
    _report(2, "zero rule", ok, f"max |beta| when zero is feasible {zero_worst:.1e} (<= 1e-8); "
            f"smallest ||beta||_inf otherwise {nonzero_min:.3g} (> 0)")
    assert ok


def test_03_noiseless_recovery():
    hits = 0
    for s in range(100):
        D = normalize_columns(gen_gaussian(50, 250, s))
        tr = gen_sparse_truth(250, 10, "gaussian_unit", 1000 + s)
        est = solve_ds(D, D.X @ tr.beta, DSOptions(1e-8))
        hits += np.linalg.norm(est.beta - tr.beta) / np.linalg.norm(tr.beta) <= 1e-4
    ok = hits >= 90
    _report(3, "noiseless recovery n=50 p=250 S=10", ok, f"{hits}/100 trials with relative error <= 1e-4 (>= 90)")
    assert ok


def test_04_constrained_lasso_replication():
    sc = _scenario("constrained_lasso_replication.json", output_path=None)
    table = run_scenario(sc, write=False)
    errs = np.array([r["rel_l2_error"] for r in table.rows if r["status"] == "ok"])
    m = table.summary["metrics"]["rel_l2_error"]
    frac = float(np.mean(errs >= 1.0))
    ok = (len(errs) == 500 and 0.53 <= m["median"] <= 0.83 and 0.08 <= m["std"] <= 0.28 and frac <= 0.05)
    _report(4, "constrained Lasso n=25 p=100 S=15, 500 replicates", ok,
            f"median {m['median']:.3f} in [0.53, 0.83], std {m['std']:.3f} in [0.08, 0.28], "
            f"{100 * frac:.1f}% with error >= 1 (<= 5%); sigma={sc.noise.sigma}, "
            f"amplitudes {sc.signal.amplitude_rule}")
    assert ok


def test_05_calibration_accuracy():
    parts, ok = [], True
    for p in (10, 100):
        mc = mc_lambda(np.eye(p), quantile=0.95, draws=200_000, seed=p).lambda_p
        exact = analytic_lambda_orthonormal(p, 0.95)
        rel = abs(mc - exact) / exact
        ok &= rel <= 0.03
        parts.append(f"p={p}: mc {mc:.4f} vs exact {exact:.4f} ({100 * rel:.2f}%)")
    _report(5, "Monte Carlo calibration on X=I", ok, "; ".join(parts) + " (<= 3%)")
    assert ok


def test_06_ideal_risk_identity():
    rng = np.random.default_rng(606)
    worst_risk = worst_bound = 0.0
    for _ in range(60):
        p = int(rng.integers(1, 13))
        X = random_orthonormal(rng, p + int(rng.integers(0, 5)), p)
        beta = rng.standard_normal(p) * float(rng.choice([0.2, 1.0, 4.0]))
        beta[rng.random(p) < 0.3] = 0.0
        sigma = float(rng.uniform(0.1, 3))
        risk, _ = ideal_risk(X, beta, sigma)
        worst_risk = max(worst_risk, abs(risk - float(np.sum(np.minimum(beta ** 2, sigma ** 2)))))
        worst_bound = max(worst_bound, abs(ideal_bound(beta, sigma) - (sigma ** 2 + risk)))
    ok = worst_risk <= 1e-10 and worst_bound <= 1e-10
    _report(6, "orthonormal ideal-risk identity", ok,
            f"max |ideal_risk - sum min(b^2, s^2)| {worst_risk:.1e}, "
            f"max |ideal_bound - (s^2 + ideal_risk)| {worst_bound:.1e} (<= 1e-10)")
    assert ok


def test_07_canonical_selection_oracle():
    rng = np.random.default_rng(707)
    p, sigma = 10, 1.0
    X = random_orthonormal(rng, p, p)
    beta = np.array([4.0, -3.0, 2.0, 1.0, 0.5, 0.2, 0.0, 0.0, 0.0, 0.0])
    lam = 2 * math.log(p)
    risk, _ = ideal_risk(X, beta, sigma)
    errs = []
    for _ in range(200):
        y = X @ beta + sigma * rng.standard_normal(p)
        errs.append(evaluate(canonical_selection(X, y, sigma, lam).beta, beta, X).pred_error)
    mean = float(np.mean(errs))
    ref = max(risk, sigma ** 2)
    bound = 10 * math.log(p) * ref
    ok = mean <= bound
    _report(7, "canonical selection vs oracle, p=10", ok,
            f"mean pred_error {mean:.3f} <= {bound:.2f}; ratio to max(ideal_risk, sigma^2) {mean / ref:.3f} "
            f"(log p = {math.log(p):.3f})")
    assert ok


def test_08_orthogonal_invariance():
    rng = np.random.default_rng(808)
    D = normalize_columns(gen_gaussian(30, 60, 8))
    X = D.X
    y = X @ gen_sparse_truth(60, 5, "gaussian_unit", 8).beta + 0.2 * rng.standard_normal(30)
    opts = DSOptions(0.4)
    base = solve_ds(X, y, opts)
    obj_gap = feas = 0.0
    for _ in range(20):
        U = random_orthonormal(rng, 30)
        rot = solve_ds(U @ X, U @ y, opts)
        obj_gap = max(obj_gap, abs(rot.objective - base.objective))
        feas = max(feas, check_feasibility(X, y, rot.beta, opts), check_feasibility(U @ X, U @ y, base.beta, opts))
    ok = obj_gap <= 1e-6 and feas <= 1e-8
    _report(8, "orthogonal invariance", ok,
            f"max l1 objective difference {obj_gap:.1e} (<= 1e-6), max cross-feasibility violation "
            f"{feas:.1e} (<= 1e-8)")
    assert ok


def test_09_gauss_dantzig_debiasing():
    ds = run_scenario(_scenario("debias_ds.json", output_path=None), write=False)
    gds = run_scenario(_scenario("debias_gds.json", output_path=None), write=False)
    m_ds = ds.summary["metrics"]["rel_l2_error"]["median"]
    m_gds = gds.summary["metrics"]["rel_l2_error"]["median"]
    ok = m_gds < m_ds and ds.summary["ok_rows"] == 100 and gds.summary["ok_rows"] == 100
    _report(9, "Gauss-Dantzig debiasing n=72 p=256 S=8", ok,
            f"median relative error GDS {m_gds:.3f} < DS {m_ds:.3f} (lambda_p {ds.summary['lambda_p']:.3f})")
    assert ok


def _complex_dft_witness(n):
    # [I  F] with the unitary DFT: comb c (sqrt(n) spikes) has F c = c, so
    # h = (c, -c) is a null vector with exactly 2 sqrt(n) nonzeros
    m = math.isqrt(n)
    F = np.fft.fft(np.eye(n)) / math.sqrt(n)
    c = np.zeros(n)
    c[::m] = 1.0
    A = np.hstack([np.eye(n), F])
    h = np.concatenate([c, -c])
    return A, h


def test_10_beyond_identifiability():
    n = 64
    D = gen_identity_fourier(n)
    rng = np.random.default_rng(1010)
    hits = 0
    for _ in range(100):
        support = rng.choice(2 * n, 8, replace=False)
        beta = np.zeros(2 * n)
        beta[support] = rng.standard_normal(8)
        est = solve_ds(D, D.X @ beta, DSOptions(1e-8))
        hits += np.linalg.norm(est.beta - beta) / np.linalg.norm(beta) <= 1e-4
    # comb witness at n = 16: a nonzero null vector of sparse support, so two
    # distinct sparse vectors share the same image X beta
    Xw = gen_identity_fourier(16).X
    h = comb_null_vector(16)
    real_resid = float(np.max(np.abs(Xw @ h)))
    real_nnz = int(np.count_nonzero(h))
    A, hc = _complex_dft_witness(16)
    cplx_resid = float(np.max(np.abs(A @ hc)))
    cplx_nnz = int(np.count_nonzero(hc))
    witness = real_resid <= 1e-10 and cplx_resid <= 1e-10 and cplx_nnz == 8 and 0 < real_nnz <= 8
    ok = hits >= 90 and witness
    _report(10, "identity+Fourier n=64 p=128 S=8", ok,
            f"{hits}/100 recovered (>= 90); comb witness: complex DFT {cplx_nnz} columns, "
            f"|Ah| {cplx_resid:.1e}; real dictionary {real_nnz} columns, |Xh| {real_resid:.1e}")
    assert ok


def test_11_lp_micro_oracle():
    rng = np.random.default_rng(1111)
    worst = 0.0
    for k in range(50):
        p = int(rng.integers(1, 5))
        n = int(rng.integers(1, 6))
        X = normalize_columns(gen_gaussian(n, p, 7000 + k)).X
        y = rng.standard_normal(n) * 2
        lam = float(rng.uniform(0.05, 1.5))
        lp = assemble_ds_lp(X, y, DSOptions(lam))
        sol = ipm_solve(lp)
        ref, _ = bfs_minimum(lp.c, lp.A, lp.b)
        assert sol.status == "optimal"
        worst = max(worst, abs(sol.objective - ref))
    ok = worst <= 1e-8
    _report(11, "LP micro-oracle p <= 4", ok, f"max |IPM - vertex enumeration| {worst:.1e} over 50 (<= 1e-8)")
    assert ok


def _without_runtime(text):
    idx = CSV_COLUMNS.index("runtime_ms")
    return [",".join(c for j, c in enumerate(line.split(",")) if j != idx) for line in text.splitlines()]


def test_12_determinism(tmp_path):
    sc = _scenario("quick.json", output_path=str(tmp_path / "a.csv"))
    run_scenario(sc, threads=1)
    first = (tmp_path / "a.csv").read_text()
    run_scenario(sc.model_copy(update={"output_path": str(tmp_path / "b.csv")}), threads=3)
    second = (tmp_path / "b.csv").read_text()
    ok = _without_runtime(first) == _without_runtime(second) and len(first.splitlines()) == 21
    _report(12, "end-to-end determinism", ok,
            "serial and 3-thread runs of the quick scenario give identical CSV apart from runtime_ms")
    assert ok


def test_supplementary_error_bound_constants():
    ds = run_scenario(_scenario("debias_ds.json", output_path=None), write=False)
    lasso = run_scenario(_scenario("debias_ds.json", output_path=None,
                                   solver={"method": "lasso", "lambda_mode": "mc_quantile"}), write=False)
    c_ds = ds.summary["constants"]["error_bound_C"]["max"]
    c_lasso = lasso.summary["constants"]["lasso_C"]["max"]
    ok = c_ds <= 50 and c_lasso <= 10
    _report("supplementary", "error-bound constants", ok,
            f"Dantzig max C {c_ds:.3f} (<= 50), Lasso max C {c_lasso:.3f} (<= 10)")
    assert ok


def test_supplementary_gds_dominance():
    # Monte Carlo means over draws where the stage-1 support covers the truth
    sc = _scenario("debias_ds.json", output_path=None, replicates=200)
    cal = mc_lambda(normalize_columns(gen_gaussian(72, 256, 5)), quantile=0.95, draws=100_000, seed=5)
    X = normalize_columns(gen_gaussian(72, 256, 5)).X
    opts = DSOptions(cal.lambda_sigma)
    pe_ds, pe_gds = [], []
    for r in range(sc.replicates):
        rng = np.random.default_rng([sc.seed_base, r])
        tr = gen_sparse_truth(256, 8, "signed_constant(5)", int(rng.integers(1 << 62)))
        y = X @ tr.beta + rng.standard_normal(72)
        g = gauss_dantzig(X, y, opts)
        if set(tr.support) <= set(g.diagnostics["subset"]):
            pe_ds.append(evaluate(g.diagnostics["stage1"].beta, tr, X).pred_error)
            pe_gds.append(evaluate(g.beta, tr, X).pred_error)
    ok = len(pe_ds) > 0 and np.mean(pe_gds) <= np.mean(pe_ds)
    _report("supplementary", "GDS dominance", ok,
            f"on {len(pe_ds)}/200 draws with covered support: mean pred_error GDS {np.mean(pe_gds):.3f} "
            f"<= DS {np.mean(pe_ds):.3f}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
