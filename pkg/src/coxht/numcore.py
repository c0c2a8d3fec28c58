"""Shared numerical primitives: seeded streams, CDFs, scalar/vector
optimizers and Dykstra's projection onto a polyhedral cone."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

__all__ = [
    "RngStream",
    "as_generator",
    "normal_sample",
    "normal_cdf",
    "chi_square_cdf",
    "NotBracketedError",
    "NonFiniteObjectiveError",
    "solve_scalar_root",
    "golden_section_extremum",
    "nelder_mead_min",
    "HalfspaceSet",
    "ProjectionResult",
    "dykstra_project",
]


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """A replayable random stream identified by ``(base_seed, stream_index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys and
    drive a counter-based Philox generator, so the draws of replication ``k``
    do not depend on which other replications ran or in which order.
    ``path`` extends the spawn key for named sub-streams (see :meth:`child`).
    """

    base_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=self.base_seed, spawn_key=(self.stream_index, *self.path)
        )

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def child(self, *keys: int) -> "RngStream":
        """Independent sub-stream, e.g. ``stream.child(1)`` for an auxiliary draw."""
        return RngStream(self.base_seed, self.stream_index, self.path + tuple(keys))


def as_generator(stream) -> np.random.Generator:
    if isinstance(stream, RngStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError(f"expected RngStream or numpy Generator, got {type(stream)!r}")


def normal_sample(stream, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    return as_generator(stream).standard_normal(count)


# ---------------------------------------------------------------------------
# distribution functions
# ---------------------------------------------------------------------------

def normal_cdf(x):
    """Standard normal CDF (``scipy.special.ndtr``, ~1e-16 absolute error)."""
    return special.ndtr(x)


def chi_square_cdf(x, dof: int):
    """CDF of the chi-square law with ``dof`` degrees of freedom.

    Evaluated as the regularized lower incomplete gamma ``P(dof/2, x/2)``.
    """
    if int(dof) != dof or dof < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("chi-square CDF argument must be non-negative")
    out = special.gammainc(0.5 * dof, 0.5 * x)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# scalar optimization
# ---------------------------------------------------------------------------

class NotBracketedError(ValueError):
    """Raised when a root solve is asked to work on a non-bracketing interval."""


class NonFiniteObjectiveError(FloatingPointError):
    """Objective returned a non-finite value at a probe point."""

    def __init__(self, x, value):
        super().__init__(f"objective is {value!r} at x={np.asarray(x).tolist()}")
        self.x = np.asarray(x)
        self.value = value


def solve_scalar_root(f: Callable[[float], float], lo: float, hi: float,
                      tol: float = 1e-12) -> float:
    """Root of a continuous ``f`` on ``[lo, hi]`` (Brent's method).

    Requires ``f(lo) * f(hi) <= 0``; otherwise :class:`NotBracketedError`.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise NotBracketedError(
            f"f({lo})={flo!r} and f({hi})={fhi!r} do not bracket a root"
        )
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                                 maxiter=500))


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_extremum(f: Callable[[float], float], lo: float, hi: float,
                            tol: float = 1e-8, sense: str = "min",
                            max_iter: int = 500) -> tuple[float, float]:
    """Golden-section search for the extremum of a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))``. On a non-unimodal function this finds a local
    extremum only.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    sgn = 1.0 if sense == "min" else -1.0

    def g(x):
        return sgn * f(x)

    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - _INVPHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INVPHI * (b - a)
            gd = g(d)
    # best of the interior probes and the bracket midpoint
    cands = [(gc, c), (gd, d)]
    mid = 0.5 * (a + b)
    cands.append((g(mid), mid))
    best_g, best_x = min(cands)
    return best_x, sgn * best_g


def nelder_mead_min(f: Callable[[np.ndarray], float], x0: Sequence[float],
                    tol: float = 1e-8, max_iter: int = 2000,
                    initial_simplex=None) -> tuple[np.ndarray, float, bool]:
    """Nelder-Mead minimization; returns ``(x, f(x), converged)``.

    ``converged`` means the simplex shrank below ``tol`` in both position and
    value before ``max_iter`` iterations. A non-finite objective anywhere
    aborts with :class:`NonFiniteObjectiveError`.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def wrapped(x):
        v = f(x)
        if not np.isfinite(v):
            raise NonFiniteObjectiveError(x, v)
        return v

    wrapped(x0)
    res = optimize.minimize(
        wrapped, x0, method="Nelder-Mead",
        options=dict(xatol=tol, fatol=tol * tol, maxiter=max_iter,
                     maxfev=max(4 * max_iter, 1000), adaptive=x0.size > 2,
                     initial_simplex=initial_simplex),
    )
    return np.asarray(res.x, dtype=float), float(res.fun), bool(res.success)


# ---------------------------------------------------------------------------
# cone projection
# ---------------------------------------------------------------------------

@dataclass
class HalfspaceSet:
    """Homogeneous polyhedral cone ``{m : rows @ m >= 0, m_i = m_j for (i, j)}``.

    Equality pairs use 0-based indices.
    """

    rows: np.ndarray
    equalities: list[tuple[int, int]] = field(default_factory=list)
    dim: int | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.size == 0:
            if self.dim is None:
                raise ValueError("dim is required for an empty row set")
            rows = rows.reshape(0, self.dim)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if self.dim is None:
            self.dim = rows.shape[1]
        elif rows.shape[1] != self.dim:
            raise ValueError("rows do not match the declared dimension")
        self.rows = rows
        self.equalities = [(int(i), int(j)) for i, j in self.equalities]
        for i, j in self.equalities:
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"equality pair {(i, j)} outside [0, {self.dim})")

    def all_rows(self) -> np.ndarray:
        """Inequality rows with each equality expanded to two opposing rows."""
        extra = np.zeros((2 * len(self.equalities), self.dim))
        for k, (i, j) in enumerate(self.equalities):
            extra[2 * k, i], extra[2 * k, j] = 1.0, -1.0
            extra[2 * k + 1, i], extra[2 * k + 1, j] = -1.0, 1.0
        return np.vstack([self.rows, extra])

    def max_violation(self, m) -> float:
        rows = self.all_rows()
        if rows.shape[0] == 0:
            return 0.0
        return float(max(0.0, -np.min(rows @ m)))


@dataclass
class ProjectionResult:
    m: np.ndarray
    converged: bool
    iterations: int


def dykstra_project(z, hs: HalfspaceSet, tol: float = 1e-8,
                    max_iter: int = 50_000) -> ProjectionResult:
    """Project ``z`` onto the cone described by ``hs`` with Dykstra's algorithm.

    Cycles through the individual halfspaces, carrying one correction vector
    per halfspace. Stops once a full sweep moves neither the iterate nor the
    corrections by more than ``tol`` (relative to ``1 + |z|``) and the
    iterate is feasible to ``tol``. On hitting ``max_iter`` the last iterate
    is returned with ``converged=False``.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (hs.dim,):
        raise ValueError(f"z has shape {z.shape}, cone dimension is {hs.dim}")
    rows = hs.all_rows()
    keep = np.einsum("ij,ij->i", rows, rows) > 0
    rows = rows[keep]
    if rows.shape[0] == 0:
        return ProjectionResult(z.copy(), True, 0)
    sq = np.einsum("ij,ij->i", rows, rows)
    x = z.copy()
    incr = np.zeros_like(rows)
    scale = 1.0 + np.linalg.norm(z)
    for it in range(1, max_iter + 1):
        x_prev = x.copy()
        moved = 0.0
        for k in range(rows.shape[0]):
            a = rows[k]
            y = x + incr[k]
            s = a @ y
            x = y - (s / sq[k]) * a if s < 0 else y
            new_incr = y - x
            moved += float(np.sum((new_incr - incr[k]) ** 2))
            incr[k] = new_incr
        change = np.linalg.norm(x - x_prev)
        if change <= tol * scale and math.sqrt(moved) <= tol * scale:
            viol = max(0.0, -float(np.min(rows @ x)))
            if viol <= tol * scale:
                return ProjectionResult(x, True, it)
    return ProjectionResult(x, False, max_iter)
