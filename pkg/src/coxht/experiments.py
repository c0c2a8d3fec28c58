"""Seeded simulation experiments writing CSV tables, JSON sidecars and figures.

Every replication owns the stream ``RngStream(seed, cell, (tag, rep))``, so
results depend only on the configuration and never on worker count or
scheduling. Aggregation runs in replication order in the parent process.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import boundary_curve
from .coxfit import SingularInformationError, fisher_std, fit_mple, lrt_stat
from .existence import mple_exists
from .inference import (classical_pvalues, corrected_pvalues, empirical_ab,
                        ks_uniform_stat, lrt_report, wald_chi2)
from .model import ModelConfig, gen_beta, generate_cohort, null_coordinates, sort_cohort
from .numcore import RngStream, as_generator
from .parallel import parallel_map
from .simplex import LPError
from .state import CENTERINGS, StateSolverError, solve_for_config

EXPERIMENTS = ("phase_diagram", "consistency", "null_dist", "classical_failure")

# stream tags, one per kind of random work
TAG_EXIST, TAG_BOUNDARY, TAG_FIT, TAG_STATE, TAG_GROUPS = 1, 2, 3, 4, 5
FIXED_BETA = 2**32 - 1


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """Experiment description; JSON config files use these field names.

    ``grids`` maps ``"delta"`` and ``"kappa"`` to value lists; a cell's
    covariate count is ``p = round(delta * model.n)``. ``boundary_reps`` /
    ``boundary_n`` size the QP Monte Carlo of the phase diagram, ``n_rep``
    and ``n_avg`` the state-equation context, ``null_coords`` the pooled
    null coordinates, ``chi2_dof`` the Wald group sizes (each drawn from
    ``chi2_partitions`` random partitions of the null set per replication),
    ``lrt_coords`` the coordinates refitted for the likelihood ratio test,
    ``fisher_at`` whether classical standard errors use the true
    coefficients (``"truth"``) or the estimate (``"estimate"``), and
    ``state_centering`` the saddle objective form (see
    :class:`coxht.state.SaddleObjective`).
    """

    experiment: str
    model: ModelConfig = field(default_factory=ModelConfig)
    grids: dict = field(default_factory=lambda: {"delta": [0.1], "kappa": [1.0]})
    reps: int = 100
    seed: int = 0
    out_dir: str = "out"
    boundary_reps: int = 500
    boundary_n: int | None = None
    n_rep: int = 2000
    n_avg: int = 1
    null_coords: int = 50
    chi2_dof: list = field(default_factory=lambda: [2, 5])
    chi2_partitions: int = 2
    lrt_coords: int = 5
    fisher_at: str = "truth"
    solve_state: bool = True
    state_centering: str = "sample"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        if isinstance(self.model, dict):
            try:
                self.model = ModelConfig(**self.model)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"model: {exc}") from exc
        if not isinstance(self.grids, dict) or set(self.grids) != {"delta", "kappa"}:
            raise ConfigError("grids must have exactly the keys 'delta' and 'kappa'")
        for key in ("delta", "kappa"):
            vals = self.grids[key]
            if not isinstance(vals, (list, tuple)) or not vals:
                raise ConfigError(f"grids.{key} must be a non-empty list")
            self.grids[key] = [float(v) for v in vals]
        if any(not 0 < d for d in self.grids["delta"]):
            raise ConfigError("grid deltas must be positive")
        if any(k < 0 for k in self.grids["kappa"]):
            raise ConfigError("grid kappas must be non-negative")
        for name in ("reps", "boundary_reps", "n_rep", "n_avg", "chi2_partitions"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.state_centering not in CENTERINGS:
            raise ConfigError(f"state_centering must be one of {CENTERINGS}")
        if self.fisher_at not in ("truth", "estimate"):
            raise ConfigError("fisher_at must be 'truth' or 'estimate'")
        if any(int(l) < 1 for l in self.chi2_dof):
            raise ConfigError("chi2_dof entries must be >= 1")
        if self.null_coords < 1 or self.lrt_coords < 0:
            raise ConfigError("null_coords must be >= 1 and lrt_coords >= 0")
        for d in self.grids["delta"]:
            if round(d * self.model.n) < 1:
                raise ConfigError(f"delta={d} gives p < 1 at n={self.model.n}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' field")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    def cells(self) -> list[tuple[float, float, ModelConfig]]:
        """``(delta, kappa, model)`` for every grid cell, delta-major."""
        out = []
        for delta in self.grids["delta"]:
            for kappa in self.grids["kappa"]:
                p = int(round(delta * self.model.n))
                m = ModelConfig(**{**self.model.to_dict(), "p": p, "kappa": kappa})
                out.append((delta, kappa, m))
        return out


@dataclass
class ExperimentResult:
    files: list[Path]
    summary: dict


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r if row]


def content_hash(obj) -> str:
    """Git blob hash of the canonical JSON form of ``obj``."""
    data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_sidecar(csv_path: Path, cfg: ExperimentConfig, extra: dict, wall: float) -> Path:
    meta = {
        "file": csv_path.name,
        "package_version": __version__,
        "config": cfg.to_dict(),
        "config_hash": content_hash(cfg.to_dict()),
        **extra,
        "wall_time_s": round(wall, 3),
    }
    side = csv_path.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    return side


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _out_dir(cfg: ExperimentConfig, out_dir) -> Path:
    d = Path(out_dir if out_dir is not None else cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# replication tasks (top level so they pickle)
# ---------------------------------------------------------------------------

def _beta_for(model: ModelConfig, seed, cell, tag, rep):
    key = FIXED_BETA if model.fix_beta else rep
    return gen_beta(model, RngStream(seed, cell, (tag, key, 0)))


def _draw(model: ModelConfig, seed, cell, tag, rep):
    beta = _beta_for(model, seed, cell, tag, rep)
    cohort = generate_cohort(model, beta, RngStream(seed, cell, (tag, rep, 1)))
    return beta, cohort


def _exist_task(args):
    model_d, seed, cell, rep = args
    model = ModelConfig(**model_d)
    _, cohort = _draw(model, seed, cell, TAG_EXIST, rep)
    try:
        return bool(mple_exists(sort_cohort(cohort), cohort.X))
    except LPError:
        return None


def _fit_task(args):
    """One fitted replication; returns plain summaries (or a failure tag)."""
    model_d, seed, cell, rep, opts = args
    model = ModelConfig(**model_d)
    beta, cohort = _draw(model, seed, cell, TAG_FIT, rep)
    sc = sort_cohort(cohort)
    try:
        fit = fit_mple(sc, cohort.X)
    except SingularInformationError:
        return {"status": "singular"}
    if fit.diverged or not fit.converged:
        return {"status": "diverged" if fit.diverged else "unconverged"}
    out = {"status": "ok", "beta_hat": fit.beta_hat, "beta": beta}
    nulls = null_coordinates(model)[: opts.get("null_coords", 0)]
    out["nulls"] = nulls
    if opts.get("fisher"):
        at = beta if opts.get("fisher_at", "truth") == "truth" else fit.beta_hat
        try:
            out["fisher_std"] = fisher_std(sc, cohort.X, at)
        except SingularInformationError:
            out["fisher_std"] = np.full(model.p, np.nan)
    lrt = []
    for j in nulls[: opts.get("lrt_coords", 0)]:
        res = lrt_stat(sc, cohort.X, int(j), full=fit)
        lrt.append(res.statistic if res.ok else float("nan"))
    out["lrt"] = np.asarray(lrt, dtype=float)
    return out


def _state_task(args):
    model_d, seed, cell, n_rep, n_avg, centering = args
    model = ModelConfig(**model_d)
    try:
        return solve_for_config(model, n_rep, RngStream(seed, cell, (TAG_STATE,)), n_avg=n_avg,
                                centering=centering)
    except StateSolverError:
        return None


def _solve_states(cfg, cells, workers):
    tasks = [(m.to_dict(), cfg.seed, c, cfg.n_rep, cfg.n_avg, cfg.state_centering)
             for c, (_, _, m) in enumerate(cells)]
    return parallel_map(_state_task, tasks, workers)


def _run_fits(cfg, cells, workers, opts):
    tasks = [(m.to_dict(), cfg.seed, c, r, opts)
             for c, (_, _, m) in enumerate(cells) for r in range(cfg.reps)]
    res = parallel_map(_fit_task, tasks, workers)
    return [res[c * cfg.reps:(c + 1) * cfg.reps] for c in range(len(cells))]


def _cell_meta(cells):
    return [{"delta": d, "kappa": k, "p": m.p, "delta_realized": m.p / m.n} for d, k, m in cells]


def _status_counts(reps):
    counts = {}
    for r in reps:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    return counts


# ---------------------------------------------------------------------------
# phase diagram
# ---------------------------------------------------------------------------

def crossing_point(deltas, fracs, level: float = 0.5) -> float:
    """First ``delta`` where the existence fraction falls through ``level``
    (linear interpolation between grid points); NaN if it never does."""
    d = np.asarray(deltas, dtype=float)
    f = np.asarray(fracs, dtype=float)
    order = np.argsort(d)
    d, f = d[order], f[order]
    for i in range(1, d.size):
        if f[i - 1] >= level > f[i]:
            return float(d[i - 1] + (f[i - 1] - level) / (f[i - 1] - f[i]) * (d[i] - d[i - 1]))
    return float("nan")


def run_phase_diagram(cfg: ExperimentConfig, out_dir=None, workers=None,
                      plots: bool = True, gnuplot: bool = False) -> ExperimentResult:
    t0 = time.perf_counter()
    out = _out_dir(cfg, out_dir)
    cells = cfg.cells()
    tasks = [(m.to_dict(), cfg.seed, c, r) for c, (_, _, m) in enumerate(cells)
             for r in range(cfg.reps)]
    verdicts = parallel_map(_exist_task, tasks, workers)
    rows, failures = [], 0
    for c, (delta, kappa, _) in enumerate(cells):
        v = verdicts[c * cfg.reps:(c + 1) * cfg.reps]
        ok = [x for x in v if x is not None]
        failures += len(v) - len(ok)
        frac = float(np.mean(ok)) if ok else float("nan")
        rows.append((delta, kappa, frac, len(ok)))
    f1 = write_csv(out / "phase_diagram.csv", ["delta", "kappa", "exist_frac", "reps"], rows)

    kappas = sorted(set(cfg.grids["kappa"]))
    bn = cfg.boundary_n or cfg.model.n
    curve = boundary_curve(cfg.model, kappas, bn, cfg.boundary_reps,
                           RngStream(cfg.seed, 0, (TAG_BOUNDARY,)), workers=workers or 1)
    f2 = write_csv(out / "boundary.csv", ["kappa", "delta_hat", "stderr"],
                   [(pt.kappa, pt.delta_hat, pt.stderr) for pt in curve])

    cross_rows = []
    for pt in curve:
        sel = [(d, f) for d, k, f, _ in rows if k == pt.kappa]
        cross = crossing_point([s[0] for s in sel], [s[1] for s in sel])
        cross_rows.append((pt.kappa, cross, pt.delta_hat, pt.stderr))
    f3 = write_csv(out / "phase_crossing.csv", ["kappa", "delta_cross", "delta_hat", "stderr"],
                   cross_rows)
    wall = time.perf_counter() - t0
    extra = {"cells": _cell_meta(cells), "lp_failures": failures,
             "boundary_n": bn, "boundary_reps": cfg.boundary_reps}
    files = [f1, f2, f3] + [write_sidecar(f, cfg, extra, wall) for f in (f1, f2, f3)]
    if plots:
        from .plots import plot_phase_diagram
        files.append(plot_phase_diagram(rows, curve, out / "phase_diagram.png"))
    if gnuplot:
        from .plots import gnuplot_phase_diagram
        files.append(gnuplot_phase_diagram(out))
    summary = {"crossings": [dict(zip(["kappa", "delta_cross", "delta_hat", "stderr"], r))
                             for r in cross_rows], "lp_failures": failures}
    return ExperimentResult(files, summary)


# ---------------------------------------------------------------------------
# consistency of (a_hat, b_hat) with (a*, b*)
# ---------------------------------------------------------------------------

CONSISTENCY_HEADER = ["kappa", "delta", "a_hat_mean", "a_hat_se", "b_hat_mean", "b_hat_se",
                      "a_star", "b_star", "solver_converged"]


def run_consistency(cfg: ExperimentConfig, out_dir=None, workers=None,
                    plots: bool = True, gnuplot: bool = False) -> ExperimentResult:
    t0 = time.perf_counter()
    out = _out_dir(cfg, out_dir)
    cells = cfg.cells()
    states = _solve_states(cfg, cells, workers)
    fits = _run_fits(cfg, cells, workers, {})
    rows, counters = [], []
    for c, (delta, kappa, m) in enumerate(cells):
        good = [r for r in fits[c] if r["status"] == "ok"]
        ab = np.array([empirical_ab(r["beta_hat"], r["beta"]) for r in good]).reshape(-1, 2)
        k = ab.shape[0]
        mean = ab.mean(axis=0) if k else np.full(2, np.nan)
        se = ab.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.full(2, np.nan)
        st = states[c]
        rows.append((kappa, m.p / m.n, mean[0], se[0], mean[1], se[1],
                     st.a_star if st else float("nan"), st.b_star if st else float("nan"),
                     bool(st and st.converged)))
        counters.append(_status_counts(fits[c]))
    f1 = write_csv(out / "consistency.csv", CONSISTENCY_HEADER, rows)
    wall = time.perf_counter() - t0
    extra = {"cells": _cell_meta(cells), "fit_status": counters,
             "state_solutions": [s.to_dict() if s else None for s in states]}
    files = [f1, write_sidecar(f1, cfg, extra, wall)]
    if plots:
        from .plots import plot_consistency
        files.append(plot_consistency(rows, out / "consistency.png"))
    if gnuplot:
        from .plots import gnuplot_consistency
        files.append(gnuplot_consistency(out))
    return ExperimentResult(files, {"rows": [dict(zip(CONSISTENCY_HEADER, r)) for r in rows]})


# ---------------------------------------------------------------------------
# null distributions of the corrected and classical tests
# ---------------------------------------------------------------------------

def _chi2_groups(nulls, l, partitions, stream):
    rng = as_generator(stream)
    groups = []
    for _ in range(partitions):
        perm = rng.permutation(nulls)
        groups += [perm[i:i + l] for i in range(0, perm.size - l + 1, l)]
    return groups


def run_null_distribution(cfg: ExperimentConfig, out_dir=None, workers=None,
                          plots: bool = True, gnuplot: bool = False) -> ExperimentResult:
    if cfg.model.beta_scheme != "half_sparse":
        raise ConfigError("null_dist needs model.beta_scheme = 'half_sparse'")
    t0 = time.perf_counter()
    out = _out_dir(cfg, out_dir)
    cells = cfg.cells()
    states = _solve_states(cfg, cells, workers)
    opts = {"null_coords": cfg.null_coords, "fisher": True, "fisher_at": cfg.fisher_at}
    fits = _run_fits(cfg, cells, workers, opts)

    p_rows, chi_rows, summary_rows, counters = [], [], [], []
    for c, (delta, kappa, m) in enumerate(cells):
        st = states[c]
        b_star = st.b_star if st else float("nan")
        corr, clas = [], []
        chi = {int(l): [] for l in cfg.chi2_dof}
        for rep, r in enumerate(fits[c]):
            if r["status"] != "ok":
                continue
            S = r["nulls"]
            bh = r["beta_hat"][S]
            pc = corrected_pvalues(bh, b_star) if b_star > 0 else np.full(S.size, np.nan)
            fs = r["fisher_std"][S]
            pz = classical_pvalues(bh, fs) if np.all(fs > 0) else np.full(S.size, np.nan)
            for j, a, b in zip(S, pc, pz):
                p_rows.append((kappa, delta, rep, int(j), a, b))
            corr += list(pc)
            clas += list(pz)
            if not b_star > 0:
                continue
            gstream = RngStream(cfg.seed, c, (TAG_GROUPS, rep))
            for l in chi:
                if l > S.size:
                    continue
                for g in _chi2_groups(S, l, cfg.chi2_partitions, gstream.child(l)):
                    rep_ = wald_chi2(r["beta_hat"][g], b_star)
                    chi[l].append(rep_.p_value)
                    chi_rows.append((kappa, delta, rep, l, rep_.statistic, rep_.p_value))
        counts = _status_counts(fits[c])
        counters.append(counts)
        excluded = sum(v for k, v in counts.items() if k != "ok")

        def ks(vals):
            vals = [v for v in vals if np.isfinite(v)]
            return (ks_uniform_stat(vals), len(vals)) if vals else (float("nan"), 0)

        d, k = ks(corr)
        summary_rows.append((kappa, delta, "corrected_z", 0, k, d, b_star, excluded))
        d, k = ks(clas)
        summary_rows.append((kappa, delta, "classical_z", 0, k, d, b_star, excluded))
        for l, vals in chi.items():
            d, k = ks(vals)
            summary_rows.append((kappa, delta, "corrected_chi2", l, k, d, b_star, excluded))

    f1 = write_csv(out / "null_pvalues.csv",
                   ["kappa", "delta", "rep", "coord", "p_corrected", "p_classical"], p_rows)
    f2 = write_csv(out / "null_chi2.csv",
                   ["kappa", "delta", "rep", "dof", "statistic", "p_value"], chi_rows)
    header = ["kappa", "delta", "family", "dof", "count", "ks_d", "b_star", "excluded_reps"]
    f3 = write_csv(out / "null_summary.csv", header, summary_rows)
    wall = time.perf_counter() - t0
    extra = {"cells": _cell_meta(cells), "fit_status": counters,
             "state_solutions": [s.to_dict() if s else None for s in states]}
    files = [f1, f2, f3] + [write_sidecar(f, cfg, extra, wall) for f in (f1, f2, f3)]
    if plots:
        from .plots import plot_null_distribution
        files.append(plot_null_distribution(p_rows, chi_rows, out / "null_dist.png"))
    if gnuplot:
        from .plots import gnuplot_null_distribution
        files.append(gnuplot_null_distribution(out))
    return ExperimentResult(files, {"summary": [dict(zip(header, r)) for r in summary_rows]})


# ---------------------------------------------------------------------------
# failure of the classical approximations
# ---------------------------------------------------------------------------

CLASSICAL_SUMMARY = ["kappa", "delta", "mean_ratio", "classical_z_ks_d", "lrt_ks_d",
                     "lrt_count", "slope", "a_star", "b_star", "solver_converged",
                     "used_reps", "excluded_reps"]


def run_classical_failure(cfg: ExperimentConfig, out_dir=None, workers=None,
                          plots: bool = True, gnuplot: bool = False) -> ExperimentResult:
    t0 = time.perf_counter()
    out = _out_dir(cfg, out_dir)
    cells = cfg.cells()
    states = _solve_states(cfg, cells, workers) if cfg.solve_state else [None] * len(cells)
    opts = {"null_coords": cfg.null_coords, "fisher": True, "fisher_at": cfg.fisher_at,
            "lrt_coords": cfg.lrt_coords}
    fits = _run_fits(cfg, cells, workers, opts)

    std_rows, lrt_rows, summary_rows, counters = [], [], [], []
    for c, (delta, kappa, m) in enumerate(cells):
        good = [r for r in fits[c] if r["status"] == "ok"]
        counts = _status_counts(fits[c])
        counters.append(counts)
        nulls = null_coordinates(m)[: cfg.null_coords]
        ratios, zp = [], []
        if good and nulls.size:
            B = np.array([r["beta_hat"][nulls] for r in good])
            F = np.array([r["fisher_std"][nulls] for r in good])
            emp = B.std(axis=0, ddof=1) if len(good) > 1 else np.full(nulls.size, np.nan)
            fis = np.nanmean(F, axis=0)
            for j, e, f in zip(nulls, emp, fis):
                std_rows.append((kappa, delta, int(j), e, f, e / f))
                ratios.append(e / f)
            ok = np.all(F > 0, axis=1)
            if ok.any():
                zp = classical_pvalues(B[ok].ravel(), F[ok].ravel())
        lrt_p = []
        for rep, r in enumerate(fits[c]):
            if r["status"] != "ok":
                continue
            for j, s in zip(nulls, r["lrt"]):
                if np.isfinite(s):
                    rep_ = lrt_report(s)
                    lrt_p.append(rep_.p_value)
                    lrt_rows.append((kappa, delta, rep, int(j), s, rep_.p_value))
        num = sum(float(r["beta_hat"] @ r["beta"]) for r in good)
        den = sum(float(r["beta"] @ r["beta"]) for r in good)
        slope = num / den if den > 0 else float("nan")
        st = states[c]
        summary_rows.append((
            kappa, m.p / m.n,
            float(np.nanmean(ratios)) if ratios else float("nan"),
            ks_uniform_stat(zp) if len(zp) else float("nan"),
            ks_uniform_stat(lrt_p) if lrt_p else float("nan"),
            len(lrt_p), slope,
            st.a_star if st else float("nan"), st.b_star if st else float("nan"),
            bool(st and st.converged), len(good), cfg.reps - len(good)))

    f1 = write_csv(out / "classical_failure.csv",
                   ["kappa", "delta", "coord", "emp_std", "fisher_std", "ratio"], std_rows)
    f2 = write_csv(out / "lrt_pvalues.csv",
                   ["kappa", "delta", "rep", "coord", "statistic", "p_value"], lrt_rows)
    f3 = write_csv(out / "classical_summary.csv", CLASSICAL_SUMMARY, summary_rows)
    wall = time.perf_counter() - t0
    extra = {"cells": _cell_meta(cells), "fit_status": counters,
             "state_solutions": [s.to_dict() if s else None for s in states]}
    files = [f1, f2, f3] + [write_sidecar(f, cfg, extra, wall) for f in (f1, f2, f3)]
    if plots:
        from .plots import plot_classical_failure
        files.append(plot_classical_failure(std_rows, lrt_rows, out / "classical_failure.png"))
    if gnuplot:
        from .plots import gnuplot_classical_failure
        files.append(gnuplot_classical_failure(out))
    return ExperimentResult(files, {"summary": [dict(zip(CLASSICAL_SUMMARY, r))
                                                for r in summary_rows]})


RUNNERS = {
    "phase_diagram": run_phase_diagram,
    "consistency": run_consistency,
    "null_dist": run_null_distribution,
    "classical_failure": run_classical_failure,
}


def run_experiment(cfg: ExperimentConfig, **kw) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg, **kw)
