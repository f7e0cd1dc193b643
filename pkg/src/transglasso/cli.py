"""Command-line interface: estimate from CSV studies, simulate, benchmark.

Exit codes are a stable scripting contract: 0 success, 2 user/input error,
3 solver failure across all candidates, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import load_csv
from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    NumericError,
    ParseError,
    SelectionError,
    TransGlassoError,
)
from .pipeline import TuningGrid, fit_trans_glasso, trans_glasso_cv
from .simulate import ExperimentConfig, gen_model, run_experiment, sample_gaussian, subseed

# Desk presets run in minutes; the *-unknown-set presets mirror the large
# mixed-sparsity scenarios (d=100, K=5) and take much longer.
PRESETS = {
    "model1-desk": dict(model_id="I", d=30, K=3, n0=100, n_source=300, h=10,
                        grid_size=15, design="model1-desk"),
    "model2-desk": dict(model_id="II", d=30, K=3, n0=200, n_source=600, h=10,
                        grid_size=15, design="model2-desk"),
    "model3-desk": dict(model_id="III", d=30, K=3, n0=150, n_source=450, h=6,
                        grid_size=15, design="model3-desk"),
    "model1-desk-mixed": dict(model_id="I", d=30, K=3, n0=100, n_source=300,
                              h=(6, 6, 60, 60), grid_size=15, design="model1-desk-mixed"),
    "model1-unknown-set": dict(model_id="I", d=100, K=5, n0=300, n_source=1000,
                               h=(20, 20, 20, 20, 600, 600), design="model1-unknown-set",
                               estimators=("trans-glasso-cv", "glasso-target", "glasso-pooled")),
    "model2-unknown-set": dict(model_id="II", d=100, K=5, n0=750, n_source=2000,
                               h=(30, 30, 30, 30, 600, 600), design="model2-unknown-set",
                               estimators=("trans-glasso-cv", "glasso-target", "glasso-pooled")),
    "model3-unknown-set": dict(model_id="III", d=100, K=5, n0=300, n_source=1000,
                               h=(10, 10, 10, 10, 300, 300), design="model3-unknown-set",
                               estimators=("trans-glasso-cv", "glasso-target", "glasso-pooled")),
}


def _bool_flag(value: str) -> bool:
    return value == "true"


def _default_seed() -> int:
    env = os.environ.get("TRANSGLASSO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"TRANSGLASSO_SEED must be an integer, got {env!r}") from None


def _parse_grid(text: str) -> TuningGrid | None:
    """'auto' -> None (data-driven default); otherwise comma-separated values,
    sorted descending and deduplicated."""
    if text == "auto":
        return None
    try:
        values = sorted({float(v) for v in text.split(",") if v.strip() != ""}, reverse=True)
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}: expected comma-separated reals") from None
    if not values:
        raise ConfigError("explicit grid is empty")
    return TuningGrid(tuple(values))


def _parse_h(text: str):
    try:
        parts = [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse h {text!r}: expected integers") from None
    if not parts:
        raise ConfigError("h is empty")
    return parts[0] if len(parts) == 1 else tuple(parts)


def _sniff_header(path) -> bool:
    """A file has a header when any cell of its first line fails float()."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip("\n")
    for cell in first.split(","):
        try:
            float(cell)
        except ValueError:
            return True
    return False


def _load_study(path, header_mode: str, study_id: int):
    has_header = _sniff_header(path) if header_mode == "auto" else header_mode == "true"
    return load_csv(path, has_header=has_header, study_id=study_id)


def _write_matrix(path, matrix) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), fmt="%.17g", delimiter=",")


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_estimate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = _load_study(args.target, args.has_header, 0)
    sources = [
        _load_study(path, args.has_header, k)
        for k, path in enumerate(args.sources, start=1)
    ]
    m_grid = _parse_grid(args.lambda_m)
    psi_grid = _parse_grid(args.lambda_psi)
    common = dict(center=args.center, psi_grids=psi_grid, m_grid=m_grid)
    if args.select_informative:
        estimate = trans_glasso_cv(target, sources, folds=args.folds,
                                   seed=args.seed, **common)
    else:
        estimate = fit_trans_glasso(target, sources, **common)
    _write_matrix(out / "omega0.csv", estimate.omega0)
    _write_json(out / "selection.json", {
        "lambda_m": estimate.lambda_m,
        "psi_lambdas": list(estimate.psi_lambdas),
        "informative_set": sorted(estimate.informative_set),
        "diagnostics": estimate.diagnostics,
        "center": args.center,
        "select_informative": args.select_informative,
        "folds": args.folds,
        "seed": args.seed,
    })
    return 0


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth = gen_model(args.model, args.d, args.K, args.h, args.seed)
    _write_matrix(out / "truth_shared.csv", truth.shared)
    for k in range(args.K + 1):
        _write_matrix(out / f"truth_omega_{k}.csv", truth.precisions[k])
    target = sample_gaussian(truth.precisions[0], args.n0, subseed(args.seed, 0, 1))
    _write_matrix(out / "target.csv", target.samples)
    for k in range(1, args.K + 1):
        study = sample_gaussian(truth.precisions[k], args.nsource,
                                subseed(args.seed, 0, 1 + k), study_id=k)
        _write_matrix(out / f"source_{k}.csv", study.samples)
    _write_json(out / "truth_meta.json", {
        "model": truth.model_id,
        "d": args.d,
        "K": args.K,
        "h_per_study": list(truth.h_per_study),
        "sigma_offset": truth.sigma_offset,
        "n0": args.n0,
        "n_source": args.nsource,
        "seed": args.seed,
    })
    return 0


def cmd_benchmark(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset is not None:
        if args.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {args.preset!r}; known: {sorted(PRESETS)}"
            )
        kwargs = dict(PRESETS[args.preset])
    else:
        for name in ("model", "d", "K", "n0", "nsource", "h"):
            if getattr(args, name) is None:
                raise ConfigError(f"--{name} is required when no --preset is given")
        kwargs = dict(model_id=args.model, d=args.d, K=args.K, n0=args.n0,
                      n_source=args.nsource, h=args.h)
    if args.estimators is not None:
        kwargs["estimators"] = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
    kwargs.update(repetitions=args.reps, seed=args.seed, folds=args.folds)
    config = ExperimentConfig(**kwargs)
    report = run_experiment(config, threads=args.threads)
    report.to_csv(out / "report.csv")
    _write_json(out / "summary.json", {
        "config": {
            "model": config.model_id,
            "design": config.design,
            "d": config.d,
            "K": config.K,
            "n0": config.n0,
            "n_source": config.n_source,
            "h": list(config.h) if not np.isscalar(config.h) else config.h,
            "repetitions": config.repetitions,
            "seed": config.seed,
            "estimators": list(config.estimators),
        },
        "estimators": report.summary,
    })
    if all(r.frob_error is None for r in report.rows):
        print("error: every repetition failed for every estimator", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transglasso",
        description="Transfer-learning estimation of sparse precision matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the target precision matrix from CSV studies")
    est.add_argument("--target", required=True, help="target study CSV")
    est.add_argument("--sources", action="append", default=[], metavar="CSV",
                     help="source study CSV (repeatable)")
    est.add_argument("--out", default=".", help="output directory")
    est.add_argument("--center", choices=["true", "false"], default="true",
                     help="subtract column means before the covariance (default true)")
    est.add_argument("--select-informative", choices=["true", "false"], default="false",
                     help="detect the informative source set by cross-validation")
    est.add_argument("--folds", type=int, default=5, help="CV folds (default 5)")
    est.add_argument("--lambda-m", default="auto",
                     help="'auto' or comma-separated candidate penalties")
    est.add_argument("--lambda-psi", default="auto",
                     help="'auto' or comma-separated candidate penalties")
    est.add_argument("--has-header", choices=["auto", "true", "false"], default="auto",
                     help="whether input CSVs carry a header row (default: sniff)")
    est.add_argument("--seed", type=int, default=None)
    est.add_argument("--threads", type=int, default=1)
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="write a synthetic truth and sampled studies")
    sim.add_argument("--model", choices=["I", "II", "III"], required=True)
    sim.add_argument("--d", type=int, required=True)
    sim.add_argument("--K", type=int, required=True)
    sim.add_argument("--h", type=_parse_h, required=True,
                     help="sparsity level, scalar or per-study comma list (target first)")
    sim.add_argument("--n0", type=int, required=True, help="target sample count")
    sim.add_argument("--nsource", type=int, required=True, help="per-source sample count")
    sim.add_argument("--out", default=".")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--threads", type=int, default=1)
    sim.set_defaults(func=cmd_simulate)

    ben = sub.add_parser("benchmark", help="run a simulation study and write report tables")
    ben.add_argument("--preset", default=None, help=f"one of {sorted(PRESETS)}")
    ben.add_argument("--model", choices=["I", "II", "III"], default=None)
    ben.add_argument("--d", type=int, default=None)
    ben.add_argument("--K", type=int, default=None)
    ben.add_argument("--h", type=_parse_h, default=None)
    ben.add_argument("--n0", type=int, default=None)
    ben.add_argument("--nsource", type=int, default=None)
    ben.add_argument("--estimators", default=None,
                     help="comma list from: trans-glasso, trans-glasso-cv, glasso-target, glasso-pooled")
    ben.add_argument("--reps", type=int, default=1)
    ben.add_argument("--folds", type=int, default=5)
    ben.add_argument("--out", default=".")
    ben.add_argument("--seed", type=int, default=None)
    ben.add_argument("--threads", type=int, default=1)
    ben.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    if hasattr(args, "center"):
        args.center = _bool_flag(args.center)
    if hasattr(args, "select_informative"):
        args.select_informative = _bool_flag(args.select_informative)
    try:
        return args.func(args)
    except (OSError, ParseError, DimensionError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SelectionError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (ContractError, NumericError, TransGlassoError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
