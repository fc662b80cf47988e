"""Command line interface.

Exit codes: 0 on success, 1 for configuration or input errors, 2 when a
single solve fails to converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import designs
from .calibration import DEFAULT_DRAWS, DEFAULT_QUANTILE, mc_lambda, mc_lambda_per_column
from .ds import DSOptions, solve_ds
from .estimate import SolverError
from .harness import ConfigError, load_scenario, read_csv, run_scenario, summarize
from .lasso import LassoOptions, solve_lasso_constrained, solve_lasso_penalized
from .linalg import read_matrix, write_matrix
from .oracles import ExhaustiveSearchRefused, canonical_selection, gauss_dantzig, gauss_lasso, ideal_risk

log = logging.getLogger("dantzig")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


def sidecar_path(matrix_path) -> Path:
    return Path(str(matrix_path) + ".meta.json")


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_sidecar(design_path) -> dict:
    path = sidecar_path(design_path)
    if not path.exists():
        raise ConfigError(f"missing metadata file {path}")
    return json.loads(path.read_text())


def _load_y(args) -> np.ndarray:
    if args.y:
        Y = read_matrix(args.y)
        return Y.ravel()
    meta = _load_sidecar(args.design)
    if "y" not in meta:
        raise ConfigError(f"no response vector: pass --y or generate with --sparsity")
    return np.asarray(meta["y"], dtype=float)


def _load_truth(design_path) -> np.ndarray:
    meta = _load_sidecar(design_path)
    truth = meta.get("truth")
    if truth is None:
        raise ConfigError(f"{sidecar_path(design_path)} has no truth; generate with --sparsity")
    beta = np.zeros(meta["cols"])
    beta[truth["support"]] = truth["values"]
    return beta


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "gaussian":
        D = designs.gen_gaussian(args.n, args.p, args.seed)
    elif kind == "bernoulli":
        D = designs.gen_bernoulli(args.n, args.p, args.seed)
    elif kind == "partial_fourier":
        D = designs.gen_partial_fourier(args.n, args.p, args.seed)
    else:
        D = designs.gen_identity_fourier(args.n)
    if args.normalize:
        D = designs.normalize_columns(D)
    meta = {"kind": D.kind, "seed": args.seed, "rows": D.n, "cols": D.p,
            "column_norms": [float(v) for v in D.column_norms]}
    if "times" in D.meta:
        meta["times"] = D.meta["times"]
    if args.sparsity is not None:
        truth = designs.gen_sparse_truth(D.p, args.sparsity, args.amplitude_rule, args.seed + 1)
        z = np.random.default_rng([args.seed, 1]).standard_normal(D.n)
        y = D.X @ truth.beta + args.sigma * z
        meta["truth"] = {"support": list(truth.support), "values": [float(truth.beta[i]) for i in truth.support],
                         "amplitude_rule": truth.amplitude_rule, "l1_norm": truth.l1_norm}
        meta["sigma"] = args.sigma
        meta["y"] = [float(v) for v in y]
    write_matrix(args.out, D.X)
    sidecar_path(args.out).write_text(json.dumps(meta, indent=2) + "\n")
    if not args.quiet:
        print(f"wrote {args.out} ({D.n} x {D.p}) and {sidecar_path(args.out)}")
    return EXIT_OK


def _ds_level(args, X) -> float:
    if args.lambda_sigma is not None:
        return args.lambda_sigma
    if args.lambda_mode == "mc":
        cal = mc_lambda(X, sigma=args.sigma, quantile=args.quantile, draws=args.draws, seed=args.seed)
        return cal.lambda_sigma
    raise ConfigError("the Dantzig Selector needs --lambda-sigma or --lambda-mode mc")


def cmd_solve(args) -> int:
    X = read_matrix(args.design)
    y = _load_y(args)
    method = args.method
    if method in ("ds", "gds"):
        opts = DSOptions(lambda_sigma=_ds_level(args, X), max_iters=args.max_iters)
        est = solve_ds(X, y, opts) if method == "ds" else gauss_dantzig(X, y, opts, tau=args.tau)
    elif method in ("lasso", "gauss-lasso"):
        if args.lam is None:
            raise ConfigError("--method lasso needs --lambda")
        opts = LassoOptions(lam=args.lam)
        est = solve_lasso_penalized(X, y, opts) if method == "lasso" else gauss_lasso(X, y, opts, tau=args.tau)
    else:
        if args.t_from_truth:
            t = float(np.sum(np.abs(_load_truth(args.design))))
        elif args.t_budget is not None:
            t = args.t_budget
        else:
            raise ConfigError("--method lasso-constrained needs --t-budget or --t-from-truth")
        est = solve_lasso_constrained(X, y, LassoOptions(t_budget=t, tie_break=args.tie_break))
    _emit(est.to_dict(), args.out)
    if est.status != "ok":
        log.error("solver stopped with status %s", est.status)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_calibrate(args) -> int:
    X = read_matrix(args.design) if args.design else np.eye(args.p)
    fn = mc_lambda_per_column if args.per_column else mc_lambda
    cal = fn(X, sigma=args.sigma, quantile=args.quantile, draws=args.draws, seed=args.seed)
    _emit(cal.to_dict(), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    X = read_matrix(args.design)
    if args.mode == "ideal-risk":
        beta = _load_truth(args.design)
        risk, subset = ideal_risk(X, beta, args.sigma, max_p=args.max_p)
        _emit({"mode": "ideal-risk", "risk": risk, "subset": list(subset)}, args.out)
    else:
        y = _load_y(args)
        lam = args.lambda_p if args.lambda_p is not None else 2.0 * math.log(X.shape[1])
        est = canonical_selection(X, y, args.sigma, lam, max_p=args.max_p)
        _emit({"mode": "canonical", "Lambda_p": lam, "subset": list(est.diagnostics["subset"]),
               "objective": est.objective, "beta": [float(v) for v in est.beta]}, args.out)
    return EXIT_OK


def _print_summary(summary: dict) -> None:
    print(f"replicates: {summary['rows']}  ok: {summary['ok_rows']}")
    print(f"{'metric':<20}{'median':>14}{'mean':>14}{'std':>14}")
    for key, vals in summary["metrics"].items():
        print(f"{key:<20}{vals['median']:>14.6g}{vals['mean']:>14.6g}{vals['std']:>14.6g}")


def cmd_experiment(args) -> int:
    sc = load_scenario(args.scenario)
    updates = {}
    if args.out:
        updates["output_path"] = args.out
    if args.seed is not None:
        updates["seed_base"] = args.seed
    if updates:
        sc = load_scenario({**sc.model_dump(), **updates})
    table = run_scenario(sc, threads=args.threads)
    if not args.quiet:
        if "metrics" in table.summary:
            _print_summary(table.summary)
        else:
            print(table.summary["error"])
        for key, vals in table.summary.get("constants", {}).items():
            print(f"{key}: max {vals['max']:.4g}  median {vals['median']:.4g}")
        if sc.output_path:
            print(f"wrote {sc.output_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = read_csv(args.results)
    summary = summarize(rows)
    if args.out:
        _emit(summary, args.out)
    if not args.quiet:
        _print_summary(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="dantzig", description="Sparse regression experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a design (and optionally a truth and response)")
    g.add_argument("--kind", choices=designs.KINDS[:-1], default="gaussian")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, default=None)
    g.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--sparsity", type=int, default=None)
    g.add_argument("--amplitude-rule", default="gaussian_unit")
    g.add_argument("--sigma", type=float, default=0.0)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", parents=[common], help="fit one estimator")
    s.add_argument("--design", required=True)
    s.add_argument("--y", default=None, help="response file; defaults to the design's metadata")
    s.add_argument("--method", choices=("ds", "gds", "lasso", "gauss-lasso", "lasso-constrained"), default="ds")
    s.add_argument("--lambda-sigma", type=float, default=None)
    s.add_argument("--lambda-mode", choices=("fixed", "mc"), default="fixed")
    s.add_argument("--quantile", type=float, default=DEFAULT_QUANTILE)
    s.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--t-budget", type=float, default=None)
    s.add_argument("--t-from-truth", action="store_true")
    s.add_argument("--tie-break", choices=("min_l1", "none"), default="min_l1")
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--max-iters", type=int, default=100)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("calibrate", parents=[common], help="Monte Carlo constraint level")
    c.add_argument("--design", default=None, help="matrix file (default: identity of size --p)")
    c.add_argument("--p", type=int, default=100)
    c.add_argument("--quantile", type=float, default=DEFAULT_QUANTILE)
    c.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    c.add_argument("--sigma", type=float, default=1.0)
    c.add_argument("--per-column", action="store_true")
    c.set_defaults(func=cmd_calibrate)

    o = sub.add_parser("oracle", parents=[common], help="exhaustive subset oracles")
    o.add_argument("--mode", choices=("ideal-risk", "canonical"), required=True)
    o.add_argument("--design", required=True)
    o.add_argument("--y", default=None)
    o.add_argument("--sigma", type=float, default=1.0)
    o.add_argument("--lambda-p", type=float, default=None)
    o.add_argument("--max-p", type=int, default=20)
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("experiment", parents=[common], help="run a scenario file")
    e.add_argument("scenario")
    e.set_defaults(func=cmd_experiment)

    r = sub.add_parser("report", parents=[common], help="summarize a results CSV")
    r.add_argument("results")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.command == "gen":
        if args.p is None:
            args.p = 2 * args.n if args.kind == "identity_fourier" else args.n
        if args.seed is None:
            args.seed = 0
    elif args.command in ("solve", "calibrate") and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except SolverError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except (ConfigError, ExhaustiveSearchRefused, ValueError, OSError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
