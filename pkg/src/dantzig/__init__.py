"""Sparse regression with the Dantzig Selector, Lasso comparators and oracles."""

from .calibration import CalibrationResult, analytic_lambda_orthonormal, mc_lambda, mc_lambda_per_column
from .designs import (DesignMatrix, SparseTruth, gen_bernoulli, gen_gaussian, gen_identity_fourier,
                      gen_partial_fourier, gen_sparse_truth, normalize_columns)
from .ds import DSOptions, assemble_ds_lp, check_feasibility, solve_ds
from .estimate import Estimate, SolverError
from .lasso import LassoOptions, solve_lasso_constrained, solve_lasso_penalized
from .lp import LPProblem, LPSolution, ipm_solve
from .oracles import (Metrics, SubsetRisk, canonical_selection, evaluate, gauss_dantzig, gauss_lasso,
                      ideal_bound, ideal_risk, subset_prediction_risk)

__version__ = "0.1.0"
