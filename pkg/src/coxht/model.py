"""Simulated Cox cohorts with exponential survival and uniform censoring."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .numcore import as_generator

BETA_SCHEMES = ("phase", "half_sparse")


@dataclass
class ModelConfig:
    """Data-generating configuration.

    ``kappa`` is the signal strength ``|beta*| / sqrt(p)``; ``baseline_rate``
    the constant baseline hazard; censoring times are ``U[censor_lo, censor_hi]``.
    """

    n: int = 200
    p: int = 40
    kappa: float = 1.0
    baseline_rate: float = 1.0
    censor_lo: float = 1.0
    censor_hi: float = 2.0
    beta_scheme: str = "phase"
    renormalize_beta: bool = True
    fix_beta: bool = False

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.baseline_rate <= 0:
            raise ValueError("baseline_rate must be positive")
        if not 0 < self.censor_lo <= self.censor_hi:
            raise ValueError("need 0 < censor_lo <= censor_hi")
        if self.beta_scheme not in BETA_SCHEMES:
            raise ValueError(f"beta_scheme must be one of {BETA_SCHEMES}")

    @property
    def delta(self) -> float:
        return self.p / self.n

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Cohort:
    X: np.ndarray
    Y: np.ndarray
    Delta: np.ndarray
    T: np.ndarray | None = None
    C: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class SortedCohort:
    """Observations ordered by decreasing time, censored first within ties.

    All indices are 0-based positions in the sorted order. ``rho[i]`` is the
    last sorted position whose time is ``>= y[i]``, so the risk set of ``i`` is
    ``range(rho[i] + 1)``. ``next_uncensored[i]`` is the smallest event
    position after ``i`` (``-1`` if none). ``tie_groups`` lists the event
    positions sharing a time, for times with at least two events.
    """

    order: np.ndarray
    y: np.ndarray
    delta: np.ndarray
    rho: np.ndarray
    uncensored: np.ndarray
    next_uncensored: np.ndarray
    tie_groups: list[np.ndarray] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def risk_set(self, i: int) -> np.ndarray:
        return np.arange(self.rho[i] + 1)


@dataclass
class ReducedCohort:
    """One-dimensional equivalent cohort, stored in sorted order."""

    y: np.ndarray
    q1: np.ndarray
    delta: np.ndarray
    kappa: float
    sorted: SortedCohort


# ---------------------------------------------------------------------------

def beta_scale(kappa: float, scheme: str) -> float:
    k2 = kappa * kappa
    if scheme == "phase":
        return math.sqrt(k2 / (1.0 / 3.0 + k2))
    return math.sqrt(2.0 * k2 / (1.0 / 3.0 + k2))


def gen_beta(config: ModelConfig, stream) -> np.ndarray:
    """Draw ``beta*`` with entries ``c * U[kappa - 1, kappa + 1]``.

    ``phase`` fills every coordinate; ``half_sparse`` fills the first
    ``ceil(p/2)`` and zeroes the rest. With ``renormalize_beta`` the draw is
    rescaled so that ``|beta*| / sqrt(p) == kappa`` exactly.
    """
    rng = as_generator(stream)
    p, kappa = config.p, config.kappa
    c = beta_scale(kappa, config.beta_scheme)
    m = p if config.beta_scheme == "phase" else math.ceil(p / 2)
    beta = np.zeros(p)
    beta[:m] = c * rng.uniform(kappa - 1.0, kappa + 1.0, size=m)
    if config.renormalize_beta and kappa > 0:
        norm = np.linalg.norm(beta)
        if norm > 0:
            beta *= kappa * math.sqrt(p) / norm
    return beta


def null_coordinates(config: ModelConfig) -> np.ndarray:
    """Coordinates that ``gen_beta`` sets exactly to zero."""
    if config.beta_scheme == "half_sparse":
        return np.arange(math.ceil(config.p / 2), config.p)
    if config.kappa == 0:
        return np.arange(config.p)
    return np.arange(0)


def survival_times(linear_predictor, u, rate: float) -> np.ndarray:
    """Inverse-CDF exponential times with hazard ``rate * exp(eta)``."""
    return -np.log(u) / (rate * np.exp(linear_predictor))


def censor(t, c) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    c = np.asarray(c, dtype=float)
    return np.minimum(t, c), (t <= c).astype(np.int8)


def generate_cohort(config: ModelConfig, beta, stream) -> Cohort:
    rng = as_generator(stream)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (config.p,):
        raise ValueError(f"beta must have length p={config.p}")
    n, p = config.n, config.p
    X = rng.standard_normal((n, p)) / math.sqrt(p)
    u = rng.uniform(size=n)
    # guard the measure-zero u == 0 draw
    u = np.where(u > 0, u, np.finfo(float).tiny)
    T = survival_times(X @ beta, u, config.baseline_rate)
    C = rng.uniform(config.censor_lo, config.censor_hi, size=n)
    Y, Delta = censor(T, C)
    return Cohort(X=X, Y=Y, Delta=Delta, T=T, C=C)


def sort_cohort(cohort_or_y, delta=None) -> SortedCohort:
    """Sort by decreasing time; within equal times censored rows come first.

    Accepts a :class:`Cohort` or raw ``(y, delta)`` arrays. The permutation is
    stable within each ``(y, delta)`` class.
    """
    if isinstance(cohort_or_y, Cohort):
        y, d = cohort_or_y.Y, cohort_or_y.Delta
    else:
        y, d = cohort_or_y, delta
    y = np.asarray(y, dtype=float)
    d = np.asarray(d).astype(np.int8)
    if y.shape != d.shape or y.ndim != 1:
        raise ValueError("y and delta must be 1-d arrays of equal length")
    n = y.shape[0]
    order = np.lexsort((np.arange(n), d, -y))
    ys, ds = y[order], d[order]

    # rho: last position of each run of equal times
    rho = np.empty(n, dtype=np.int64)
    if n:
        new_run = np.empty(n, dtype=bool)
        new_run[0] = True
        new_run[1:] = ys[1:] != ys[:-1]
        starts = np.flatnonzero(new_run)
        ends = np.append(starts[1:] - 1, n - 1)
        run_id = np.cumsum(new_run) - 1
        rho = ends[run_id]

    uncensored = np.flatnonzero(ds == 1)
    next_unc = np.full(n, -1, dtype=np.int64)
    if uncensored.size:
        pos = np.searchsorted(uncensored, np.arange(n), side="right")
        ok = pos < uncensored.size
        next_unc[ok] = uncensored[pos[ok]]

    tie_groups = []
    if uncensored.size > 1:
        ev_y = ys[uncensored]
        brk = np.flatnonzero(ev_y[1:] != ev_y[:-1]) + 1
        for grp in np.split(uncensored, brk):
            if grp.size >= 2:
                tie_groups.append(grp)
    return SortedCohort(order=order, y=ys, delta=ds, rho=rho,
                        uncensored=uncensored, next_uncensored=next_unc,
                        tie_groups=tie_groups)


def reduce_to_1d(config: ModelConfig, n: int, stream) -> ReducedCohort:
    """Rotated one-covariate cohort ``(y_i, q_i1, Delta_i)`` in sorted order.

    ``q1 ~ N(0, 1)`` and the latent time has hazard
    ``baseline_rate * exp(kappa * q1)``.
    """
    rng = as_generator(stream)
    q = rng.standard_normal(n)
    u = rng.uniform(size=n)
    u = np.where(u > 0, u, np.finfo(float).tiny)
    t = survival_times(config.kappa * q, u, config.baseline_rate)
    c = rng.uniform(config.censor_lo, config.censor_hi, size=n)
    y, d = censor(t, c)
    sc = sort_cohort(y, d)
    return ReducedCohort(y=sc.y, q1=q[sc.order], delta=sc.delta,
                         kappa=config.kappa, sorted=sc)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_cohort_csv(cohort: Cohort, path) -> None:
    p = cohort.p
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "Y", "Delta"] + [f"X{j + 1}" for j in range(p)])
        for i in range(cohort.n):
            w.writerow([i + 1, repr(float(cohort.Y[i])), int(cohort.Delta[i])]
                       + [repr(float(v)) for v in cohort.X[i]])


def read_cohort_csv(path) -> Cohort:
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:3] != ["id", "Y", "Delta"] or len(header) < 4:
            raise ValueError("cohort CSV must start with columns id,Y,Delta,X1..")
        rows = [row for row in r if row]
    data = np.array([[float(v) for v in row[1:]] for row in rows], dtype=float)
    if data.size == 0:
        raise ValueError("cohort CSV has no rows")
    delta = data[:, 1]
    if not np.all((delta == 0) | (delta == 1)):
        raise ValueError("Delta column must be 0/1")
    return Cohort(X=data[:, 2:], Y=data[:, 0], Delta=delta.astype(np.int8))
