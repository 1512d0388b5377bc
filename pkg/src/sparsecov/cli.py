"""Command-line workflows: simulate, estimate, cv, eval, bench, rerun.

Every command writes its outputs plus a manifest.json recording the
command, its parameters, the seed, and the library version; ``rerun``
replays a manifest and reproduces all outputs byte for byte (only the
manifest timestamp differs).  Matrices travel as headerless CSV, full
p-by-p even when symmetric; structured results are JSON.

Exit codes: 0 success, 2 usage or validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .matcore import (
    NotPositiveDefiniteError,
    load_data_csv,
    load_symmetric_csv,
    sample_covariance,
    save_matrix_csv,
)
from .evaluation import compute_report
from .proxdist import FitConfig, fit, fit_correlation
from .sparsity import SparsityConstraint
from .baselines import ThresholdSpec, threshold
from .sylvester import NoConvergenceError
from .synthdata import RngStream, SimDesign, make_design, sample_mvn
from .tuning import CvSpec, cross_validate, default_grid

DESIGN_ALIASES = {
    "independent": "independent",
    "ma": "moving_average",
    "cliques": "cliques",
    "random": "random_sparse",
}


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _jsonable(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, params: dict, seed: int) -> None:
    _write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "parameters": params,
            "seed": seed,
            "library_version": __version__,
            "timestamp": _utc_now(),
        },
    )


def _ensure_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_simulate(params: dict, out_dir: Path) -> None:
    design = SimDesign(
        kind=DESIGN_ALIASES[params["design"]],
        p=params["p"],
        sparsity_frac=params["sparsity"],
        seed=params["seed"],
    )
    truth = make_design(design)
    data = sample_mvn(truth, params["n"], RngStream(seed=design.seed, stream_id=1))
    save_matrix_csv(out_dir / "truth.csv", truth)
    save_matrix_csv(out_dir / "data.csv", data)
    _write_manifest(out_dir, "simulate", params, params["seed"])


def _load_covariance(params: dict) -> tuple[np.ndarray, int | None]:
    """The working covariance and, when raw data was given, its row count."""
    if params.get("cov"):
        return load_symmetric_csv(params["cov"]), None
    data = load_data_csv(params["input"])
    return sample_covariance(data), data.shape[0]


def _fit_config(params: dict) -> FitConfig:
    ridge = params.get("ridge", "auto")
    ridge_delta = 0.0 if ridge == "auto" else float(ridge)
    return FitConfig(
        rho0=params.get("rho0", 0.1),
        rho_growth=params.get("rho_growth", 1.2),
        tol=params.get("tol", 1e-6),
        ridge_delta=ridge_delta,
    )


def _run_estimate(params: dict, out_dir: Path) -> None:
    S, _ = _load_covariance(params)
    cfg = _fit_config(params)
    k = params["k"]
    if params.get("mode", "cov") == "corr":
        d = np.sqrt(np.diag(S))
        R = S / np.outer(d, d)
        R[np.diag_indices_from(R)] = 1.0
        result = fit_correlation(R, k, cfg)
    else:
        result = fit(S, SparsityConstraint(k=k), cfg)
    save_matrix_csv(out_dir / "sigma_hat.csv", result.sigma_hat)
    _write_json(
        out_dir / "fit.json",
        {
            "objective_trace": result.objective_trace,
            "rho_trace": result.rho_trace,
            "iterations": result.iterations,
            "halvings": result.total_halvings,
            "converged": result.converged,
            "final_penalty": result.final_penalty,
            "ridge_delta": result.ridge_delta,
        },
    )
    _write_manifest(out_dir, "estimate", params, 0)


def _run_cv(params: dict, out_dir: Path) -> None:
    data = load_data_csv(params["input"])
    S = sample_covariance(data)
    method = params["method"]
    cfg = _fit_config(params)
    if params.get("grid_file"):
        grid = np.loadtxt(params["grid_file"], ndmin=1)
    else:
        grid = default_grid(method, S, params.get("grid_size", 40))
    spec = CvSpec(
        grid=grid,
        folds=params.get("folds", 5),
        loss=params.get("loss", "frobenius"),
        seed=params.get("seed", 0),
    )
    best, table = cross_validate(data, method, spec, cfg)
    with open(out_dir / "cv_table.csv", "w") as fh:
        fh.write("param,mean_loss,stderr,n_folds,boundary_flag\n")
        for row in table:
            fh.write(
                f"{row.param:.17g},{row.mean_loss:.17g},{row.stderr:.17g},"
                f"{row.n_folds},{int(row.boundary)}\n"
            )
    boundary = any(row.boundary for row in table)
    _write_json(
        out_dir / "best_param.json",
        {"method": method, "best_param": best, "boundary": boundary},
    )
    if method == "proxdist":
        est = fit(S, SparsityConstraint(k=int(best)), cfg).sigma_hat
    else:
        est = threshold(S, ThresholdSpec(lam=float(best), kind=method))
    save_matrix_csv(out_dir / "sigma_hat.csv", est)
    _write_manifest(out_dir, "cv", params, params.get("seed", 0))


def _run_eval(params: dict, out_dir: Path) -> None:
    truth = load_symmetric_csv(params["truth"])
    estimate = load_symmetric_csv(params["estimate"])
    S = None
    n = None
    if params.get("data"):
        data = load_data_csv(params["data"])
        S = sample_covariance(data)
        n = data.shape[0]
    report = compute_report(truth, estimate, S=S, n=n)
    _write_json(out_dir / "metrics.json", report.to_dict())
    _write_manifest(out_dir, "eval", params, 0)


def _run_bench(params: dict, out_dir: Path) -> None:
    p_list = params["p_list"]
    n = params["n"]
    reps = params.get("reps", 3)
    seed = params.get("seed", 0)
    rows = []
    for p in p_list:
        # Banded truth: positive definite at every dimension, unlike
        # random sparse draws whose rejection step stalls for large p.
        design = SimDesign(kind="moving_average", p=p, seed=seed)
        truth = make_design(design)
        data = sample_mvn(truth, n, RngStream(seed=seed, stream_id=p))
        S = sample_covariance(data)
        k = max(1, round(0.02 * p * (p - 1) / 2))
        times = []
        iterations = 0
        for _ in range(reps):
            start = time.perf_counter()
            result = fit(S, SparsityConstraint(k=k))
            times.append(time.perf_counter() - start)
            iterations = result.iterations
        rows.append((p, float(np.median(times)), iterations))
    with open(out_dir / "bench.csv", "w") as fh:
        fh.write("p,median_seconds,iterations\n")
        for p, secs, iters in rows:
            fh.write(f"{p},{secs:.17g},{iters}\n")
    if len(rows) >= 2:
        logs = np.log([r[0] for r in rows]), np.log([r[1] for r in rows])
        slope = float(np.polyfit(logs[0], logs[1], 1)[0])
        print(f"log-log slope of seconds vs p: {slope:.3f}")
    _write_manifest(out_dir, "bench", params, seed)


COMMANDS = {
    "simulate": _run_simulate,
    "estimate": _run_estimate,
    "cv": _run_cv,
    "eval": _run_eval,
    "bench": _run_bench,
}


def _run_rerun(manifest_path: str, override_dir: str | None) -> None:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    if command not in COMMANDS:
        raise ValueError(f"manifest names unknown command {command!r}")
    params = manifest["parameters"]
    out = override_dir or params.get("out_dir", ".")
    COMMANDS[command](params, _ensure_dir(out))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsecov",
        description="Sparse covariance estimation workflows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a ground truth and dataset")
    p_sim.add_argument("--design", required=True, choices=sorted(DESIGN_ALIASES))
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--sparsity", type=float, default=0.02)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out-dir", required=True)

    p_est = sub.add_parser("estimate", help="fit a sparse covariance matrix")
    src = p_est.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="data matrix CSV, one row per observation")
    src.add_argument("--cov", help="sample covariance CSV")
    p_est.add_argument("--k", type=int, required=True)
    p_est.add_argument("--mode", choices=("cov", "corr"), default="cov")
    p_est.add_argument("--rho0", type=float, default=0.1)
    p_est.add_argument("--rho-growth", type=float, default=1.2)
    p_est.add_argument("--tol", type=float, default=1e-6)
    p_est.add_argument("--ridge", default="auto", help='"auto" or a ridge value')
    p_est.add_argument("--out", required=True, help="output directory")

    p_cv = sub.add_parser("cv", help="cross-validate a tuning parameter")
    p_cv.add_argument("--input", required=True)
    p_cv.add_argument("--method", required=True, choices=("proxdist", "soft", "hard"))
    p_cv.add_argument("--folds", type=int, default=5)
    grid = p_cv.add_mutually_exclusive_group()
    grid.add_argument("--grid-size", type=int, default=40)
    grid.add_argument("--grid-file")
    p_cv.add_argument("--loss", choices=("frobenius", "entropy"), default="frobenius")
    p_cv.add_argument("--seed", type=int, default=0)
    p_cv.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("eval", help="score an estimate against a truth")
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--estimate", required=True)
    p_eval.add_argument("--data", help="optional data CSV for likelihood criteria")
    p_eval.add_argument("--out", required=True, help="output directory")

    p_bench = sub.add_parser("bench", help="time fits across dimensions")
    p_bench.add_argument(
        "--p-list", required=True, help="comma-separated dimensions, e.g. 50,100,200"
    )
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--out-dir", default=".")

    p_rerun = sub.add_parser("rerun", help="replay a recorded manifest")
    p_rerun.add_argument("manifest")
    p_rerun.add_argument("--out-dir", help="override the output directory")

    return parser


def _params_from_args(args: argparse.Namespace) -> tuple[dict, str]:
    """Split the parsed namespace into (parameters, out_dir).

    The output directory is kept inside the parameters too, so the
    manifest alone suffices to replay the command.
    """
    params = vars(args).copy()
    command = params.pop("command")
    out = params.pop("out_dir", None)
    if out is None:
        out = params.pop("out", None)
    else:
        params.pop("out", None)
    if command == "bench":
        params["p_list"] = [int(tok) for tok in str(params["p_list"]).split(",")]
    out = out or "."
    params["out_dir"] = str(out)
    return params, str(out)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            _run_rerun(args.manifest, args.out_dir)
        else:
            params, out = _params_from_args(args)
            COMMANDS[args.command](params, _ensure_dir(out))
    except (NotPositiveDefiniteError, NoConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
