import numpy as np
import pytest
from scipy.optimize import linprog

from dantzig.lp import LPProblem, ipm_solve
from lp_reference import bfs_minimum


def test_corner_optimum():
    sol = ipm_solve(LPProblem(c=[1.0], A=[[1.0]], b=[5.0]))
    assert sol.status == "optimal"
    assert abs(sol.x[0]) <= 1e-8
    assert sol.gap <= 1e-8 * (1 + abs(sol.objective))


def test_infeasible_is_not_optimal():
    sol = ipm_solve(LPProblem(c=[1.0], A=[[1.0]], b=[-1.0]))
    assert sol.status == "infeasible"
    assert not sol.ok


def test_unbounded_is_not_optimal():
    # min -x with x >= 0 and no upper bound (the row only bounds -x)
    sol = ipm_solve(LPProblem(c=[-1.0], A=[[-1.0]], b=[0.0]))
    assert sol.status == "unbounded"


def test_free_variables():
    # min x  s.t.  x >= -2 written as -x <= 2 with x free
    sol = ipm_solve(LPProblem(c=[1.0], A=[[-1.0]], b=[2.0], nonneg_count=0))
    assert sol.status == "optimal"
    assert abs(sol.x[0] + 2.0) <= 1e-7


def test_problem_validation():
    with pytest.raises(ValueError):
        LPProblem(c=[1.0, 2.0], A=[[1.0]], b=[1.0])
    with pytest.raises(ValueError):
        LPProblem(c=[1.0], A=[[1.0]], b=[1.0], nonneg_count=2)
    with pytest.raises(ValueError):
        ipm_solve(LPProblem(c=[1.0], A=[[1.0]], b=[1.0]), tol_gap=0)


def test_max_iters_status():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 6))
    lp = LPProblem(c=rng.standard_normal(6), A=np.vstack([A, np.eye(6)]), b=np.concatenate([A @ np.ones(6) + 1, 5 * np.ones(6)]))
    sol = ipm_solve(lp, max_iters=1)
    assert sol.status == "max_iters"
    assert sol.iterations == 1


def test_certificates_on_optimal():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m, n = rng.integers(2, 12, size=2)
        A = rng.standard_normal((m, n))
        x0 = rng.uniform(0, 1, n)
        A = np.vstack([A, np.eye(n)])
        b = np.concatenate([A[:m] @ x0 + rng.uniform(0, 1, m), x0 + 3])
        c = rng.standard_normal(n)
        sol = ipm_solve(LPProblem(c, A, b))
        assert sol.status == "optimal"
        assert sol.gap <= 1e-8 * (1 + abs(sol.objective))
        assert sol.primal_infeas <= 1e-8 and sol.dual_infeas <= 1e-8
        assert np.all(A @ sol.x <= b + 1e-7 * (1 + np.abs(b).max()))
        assert np.all(sol.x >= -1e-9)


def test_matches_exhaustive_vertex_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(30):
        m, n = rng.integers(1, 5), rng.integers(1, 4)
        A = rng.standard_normal((m, n))
        b = A @ rng.uniform(0, 1, n) + rng.uniform(0, 1, m)
        A = np.vstack([A, np.eye(n)])
        b = np.concatenate([b, 2 * np.ones(n)])
        c = rng.standard_normal(n)
        ref, _ = bfs_minimum(c, A, b)
        sol = ipm_solve(LPProblem(c, A, b))
        assert sol.status == "optimal"
        assert abs(sol.objective - ref) <= 1e-8 * (1 + abs(ref))


def test_agrees_with_highs_on_mixed_sign_problems():
    rng = np.random.default_rng(3)
    for _ in range(40):
        m, n = rng.integers(1, 15), rng.integers(1, 15)
        k = int(rng.integers(0, n + 1))
        A = rng.standard_normal((m, n))
        x0 = rng.uniform(0, 1, n)
        A = np.vstack([A, np.eye(n), -np.eye(n)])
        b = np.concatenate([A[:m] @ x0 + rng.uniform(0, 1, m), x0 + 5, 5 - x0])
        c = rng.standard_normal(n)
        sol = ipm_solve(LPProblem(c, A, b, k))
        ref = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * k + [(None, None)] * (n - k), method="highs")
        assert sol.status == "optimal"
        assert abs(sol.objective - ref.fun) <= 1e-7 * (1 + abs(ref.fun))


def test_polishing_tightens_gap_without_changing_status():
    rng = np.random.default_rng(77)
    for _ in range(20):
        A = rng.standard_normal((8, 5))
        lp = LPProblem(c=rng.uniform(0.1, 2, 5), A=A, b=A @ rng.uniform(0, 1, 5) + rng.uniform(0, 1, 8))
        raw = ipm_solve(lp, polish_iters=0)
        pol = ipm_solve(lp)
        assert raw.status == pol.status == "optimal"
        assert pol.gap <= raw.gap
        assert pol.primal_infeas <= 1e-8 and pol.dual_infeas <= 1e-8
        assert pol.iterations >= raw.iterations
