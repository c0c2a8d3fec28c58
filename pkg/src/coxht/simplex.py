"""Dense two-phase primal simplex on a full tableau.

:func:`simplex_max` solves ``max c @ x  s.t.  A x <= b, x >= 0``; rows with
a negative right-hand side get an artificial variable and are driven out in
phase 1. :func:`simplex_max_eq` handles the equality form
``A x = b, x >= 0`` when the caller supplies a feasible starting basis.
Pivoting follows Bland's smallest-index rule by default, which cannot
cycle; ``rule="dantzig"`` uses the most positive reduced cost and drops to
Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    """Simplex failed: pivot budget exhausted or problem infeasible."""


class LPUnbounded(LPError):
    pass


class LPInfeasible(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    pivots: int


def _pivot(T, basis, r, k):
    row = T[r] / T[r, k]
    col = T[:, k].copy()
    T -= col[:, None] * row[None, :]
    T[r] = row
    basis[r] = k


def _run(T, basis, n_cols, eps, rule, max_pivots, count):
    """Iterate on tableau ``T`` whose last row holds the negated reduced costs
    (``T[-1, j] < 0`` means column j improves the objective)."""
    m = T.shape[0] - 1
    degenerate = 0
    while True:
        cost = T[-1, :n_cols]
        use_bland = rule == "bland" or degenerate > 50
        if use_bland:
            cand = np.flatnonzero(cost < -eps)
            if cand.size == 0:
                return count
            k = int(cand[0])
        else:
            k = int(np.argmin(cost))
            if cost[k] >= -eps:
                return count
        col = T[:m, k]
        pos = np.flatnonzero(col > eps)
        if pos.size == 0:
            raise LPUnbounded("objective is unbounded")
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        tied = pos[ratios <= best + eps * max(1.0, abs(best))]
        r = int(tied[np.argmin(basis[tied])])
        degenerate = degenerate + 1 if T[r, -1] <= eps else 0
        _pivot(T, basis, r, k)
        count += 1
        if count > max_pivots:
            raise LPError(f"simplex exceeded {max_pivots} pivots (cycling guard)")


def simplex_max(c, A, b, eps: float = 1e-9, rule: str = "bland",
                max_pivots: int | None = None) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    if rule not in ("bland", "dantzig"):
        raise ValueError("rule must be 'bland' or 'dantzig'")
    if max_pivots is None:
        max_pivots = 50 * (m + n) + 1000

    neg = np.flatnonzero(b < 0)
    n_art = neg.size
    n_cols = n + m + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    basis = np.arange(n, n + m)
    if n_art:
        # row i: -a x - s_i + art = -b_i  with the artificial basic
        T[neg, :n + m] *= -1.0
        T[neg, -1] *= -1.0
        T[neg, n + m + np.arange(n_art)] = 1.0
        basis[neg] = n + m + np.arange(n_art)
        # phase 1: maximize -sum(artificials)
        T[-1, :] = 0.0
        T[-1, n + m:n + m + n_art] = 1.0
        T[-1] -= T[neg].sum(axis=0)
        count = _run(T, basis, n_cols, eps, rule, max_pivots, 0)
        if T[-1, -1] < -eps * max(1.0, np.abs(b).max()):
            raise LPInfeasible("no feasible point")
        # pivot remaining (degenerate) artificials out of the basis
        for r in np.flatnonzero(basis >= n + m):
            nz = np.flatnonzero(np.abs(T[r, :n + m]) > eps)
            if nz.size:
                _pivot(T, basis, r, int(nz[0]))
        T = np.delete(T, np.s_[n + m:n + m + n_art], axis=1)
        n_cols = n + m
    else:
        count = 0

    T[-1, :] = 0.0
    T[-1, :n] = -c
    for r in range(m):
        if basis[r] < n_cols and T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    count = _run(T, basis, n_cols, eps, rule, max_pivots, count)
    x = np.zeros(n_cols)
    ok = basis < n_cols
    x[basis[ok]] = T[:m, -1][ok]
    return LPResult(x=x[:n], value=float(T[-1, -1]), pivots=count)


def simplex_max_eq(c, A, b, basis, eps: float = 1e-9, rule: str = "bland",
                   max_pivots: int | None = None) -> LPResult:
    """``max c @ x  s.t.  A x = b, x >= 0`` from a known feasible basis.

    ``basis[r]`` is the column that is basic in row ``r``; those columns must
    form the identity and ``b`` must be non-negative.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    basis = np.array(basis, dtype=np.int64)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,) or basis.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    if rule not in ("bland", "dantzig"):
        raise ValueError("rule must be 'bland' or 'dantzig'")
    if np.any(b < 0):
        raise ValueError("right-hand side must be non-negative")
    if not np.allclose(A[:, basis], np.eye(m)):
        raise ValueError("starting basis columns are not the identity")
    if max_pivots is None:
        max_pivots = 50 * (m + n) + 1000
    T = np.zeros((m + 1, n + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    T[-1, :n] = -c
    for r in range(m):
        if T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    count = _run(T, basis, n, eps, rule, max_pivots, 0)
    x = np.zeros(n)
    # re-solve the final basis against the original data to shed the
    # rounding accumulated over the pivots
    try:
        xb = np.linalg.solve(A[:, basis], b)
        if not np.all(np.isfinite(xb)) or np.any(xb < -eps):
            raise np.linalg.LinAlgError
        x[basis] = np.maximum(xb, 0.0)
        value = float(c @ x)
    except np.linalg.LinAlgError:
        x[basis] = T[:m, -1]
        value = float(T[-1, -1])
    return LPResult(x=x, value=value, pivots=count)
