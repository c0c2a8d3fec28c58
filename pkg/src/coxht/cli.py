"""Command line entry point: ``coxht <command> ...``.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .boundary import boundary_curve
from .coxfit import SingularInformationError, fisher_std, fit_mple
from .existence import check_existence
from .experiments import (EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment,
                          write_csv)
from .model import ModelConfig, gen_beta, generate_cohort, read_cohort_csv, sort_cohort
from .model import write_cohort_csv
from .numcore import RngStream
from .parallel import default_workers
from .simplex import LPError
from .state import CENTERINGS, StateSolverError, solve_for_params

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _censor(text: str) -> tuple[float, float]:
    vals = _floats(text, "--censor")
    if len(vals) != 2:
        raise UsageError("--censor takes 'lo,hi'")
    return vals[0], vals[1]


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _model_from(d: dict) -> ModelConfig:
    d = d.get("model", d) if isinstance(d, dict) else d
    try:
        return ModelConfig(**d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"model config: {exc}") from None


def _read_cohort(path):
    try:
        return read_cohort_csv(path)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read cohort {path}: {exc}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.config is None:
        raise UsageError("generate needs --config")
    model = _model_from(_load_json(args.config))
    seed = args.seed if args.seed is not None else 0
    stream = RngStream(seed)
    beta = gen_beta(model, stream.child(0))
    cohort = generate_cohort(model, beta, stream.child(1))
    out = Path(args.out or "cohort.csv")
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "cohort.csv"
    write_cohort_csv(cohort, out)
    meta = {"config": model.to_dict(), "seed": seed, "beta": beta.tolist(),
            "events": int(cohort.Delta.sum())}
    out.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _print_json({"cohort": str(out), "n": model.n, "p": model.p, "events": meta["events"]})
    return EXIT_OK


def cmd_fit(args) -> int:
    cohort = _read_cohort(args.cohort)
    sc = sort_cohort(cohort)
    fit = fit_mple(sc, cohort.X)
    try:
        std = fisher_std(sc, cohort.X, fit.beta_hat).tolist()
    except SingularInformationError:
        std = None
    _print_json({"beta_hat": fit.beta_hat.tolist(), "loglik": fit.loglik,
                 "converged": fit.converged, "diverged": fit.diverged, "fisher_std": std})
    return EXIT_OK


def cmd_exists(args) -> int:
    cohort = _read_cohort(args.cohort)
    res = check_existence(sort_cohort(cohort), cohort.X, warn=False)
    _print_json({"exists": res.exists, "lp_value": res.lp_value, "rows": res.rows})
    return EXIT_OK


def cmd_boundary(args) -> int:
    grid = _floats(args.kappa_grid, "--kappa-grid")
    lo, hi = _censor(args.censor)
    try:
        model = ModelConfig(n=args.n, p=1, baseline_rate=args.lam, censor_lo=lo, censor_hi=hi)
        curve = boundary_curve(model, grid, args.n, args.reps, RngStream(args.seed),
                               workers=args.workers or default_workers())
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = ["kappa", "delta_hat", "stderr", "n", "reps"]
    rows = [(pt.kappa, pt.delta_hat, pt.stderr, pt.n, pt.reps) for pt in curve]
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_csv(out, header, rows)
        if not args.no_plots:
            from .plots import plot_boundary
            plot_boundary(rows, out.with_suffix(".png"))
    else:
        sys.stdout.write(",".join(header) + "\n")
        for r in rows:
            sys.stdout.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in r)
                             + "\n")
    return EXIT_OK


def cmd_solve_state(args) -> int:
    lo, hi = _censor(args.censor)
    try:
        sol = solve_for_params(args.kappa, args.delta, args.lam, lo, hi, args.nrep,
                               RngStream(args.seed), n_avg=args.navg,
                               centering=args.centering)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _print_json(sol.to_dict())
    return EXIT_OK if sol.converged else EXIT_NUMERIC


def cmd_experiment(args) -> int:
    if args.config is None:
        raise UsageError("experiment needs --config")
    d = _load_json(args.config)
    if isinstance(d, dict):
        d.setdefault("experiment", args.name)
    cfg = ExperimentConfig.from_dict(d)
    if cfg.experiment != args.name:
        raise ConfigError(f"config is for {cfg.experiment!r}, not {args.name!r}")
    if args.seed is not None:
        cfg.seed = args.seed
    res = run_experiment(cfg, out_dir=args.out, workers=args.workers or default_workers(),
                         plots=not args.no_plots, gnuplot=args.gnuplot)
    _print_json({"files": [str(f) for f in res.files], "summary": res.summary})
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coxht", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON configuration file")
        if seed:
            p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: available cores)")
        p.add_argument("--gnuplot", action="store_true", help="also write gnuplot scripts")
        p.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    p = sub.add_parser("generate", help="simulate a cohort and write it as CSV")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="maximize the partial likelihood for a cohort CSV")
    p.add_argument("cohort")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("exists", help="decide whether the MPLE exists for a cohort CSV")
    p.add_argument("cohort")
    p.set_defaults(func=cmd_exists)

    p = sub.add_parser("boundary", help="Monte Carlo existence boundary over a kappa grid")
    common(p, seed=False)
    p.add_argument("--kappa-grid", default="1")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--censor", default="1,2")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("solve-state", help="solve the state equations for (a*, b*, r*)")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--censor", default="1,2")
    p.add_argument("--nrep", type=int, default=2000)
    p.add_argument("--navg", type=int, default=1)
    p.add_argument("--centering", choices=CENTERINGS, default="sample")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve_state)

    p = sub.add_parser("experiment", help="run a configured simulation experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    common(p)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"coxht: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StateSolverError, SingularInformationError, LPError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"coxht: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
