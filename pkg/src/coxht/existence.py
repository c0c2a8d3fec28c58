"""Finite-sample existence of the maximum partial likelihood estimator.

The estimator fails to exist exactly when some direction ``b`` makes every
risk-set comparison ``b @ (x_i - x_j)`` (event ``i``, ``j`` at risk at
``y_i``) non-negative and at least one strictly positive. That is decided
by the box-constrained LP

    max_{-1 <= b <= 1}  sum_r r @ b   s.t.  r @ b >= 0 for every row r,

whose value is positive iff such a direction exists.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import SortedCohort
from .simplex import simplex_max, simplex_max_eq

CHAIN, TIE, PAIR = "chain", "tie", "pair"


class NoEventsError(ValueError):
    def __init__(self):
        super().__init__("no events")


class RankDeficientWarning(UserWarning):
    """Constraint rows span fewer than p dimensions."""


@dataclass
class ConstraintMatrix:
    """Difference rows ``x_a - x_b`` of the sorted design.

    ``pairs[k] = (a, b)`` are the sorted positions (0-based) behind row k and
    ``provenance[k]`` is ``"chain"``, ``"tie"`` or ``"pair"`` (full set).
    """

    rows: np.ndarray
    pairs: np.ndarray
    provenance: list[str]

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass
class ExistenceResult:
    exists: bool
    lp_value: float
    rows: int
    rank: int
    full_rank: bool


def _design(sc: SortedCohort, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != sc.n:
        raise ValueError(f"X has {X.shape[0]} rows, cohort has {sc.n}")
    return X[sc.order]


def _from_pairs(Xs, pairs, tags) -> ConstraintMatrix:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    rows = Xs[pairs[:, 0]] - Xs[pairs[:, 1]]
    return ConstraintMatrix(rows=rows.reshape(-1, Xs.shape[1]), pairs=pairs,
                            provenance=list(tags))


def build_reduced_constraints(sc: SortedCohort, X) -> ConstraintMatrix:
    """At most ``2(n - 1)`` rows whose cone equals that of the full set.

    Event ``i_l`` is compared with every position from the previous event
    ``i_{l-1}`` (position 0 for the first event) up to ``i_l - 1``; tied
    events are additionally chained in reverse so the pair is forced equal.
    """
    Xs = _design(sc, X)
    events = sc.uncensored
    if events.size == 0:
        raise NoEventsError()
    pairs, tags = [], []
    prev = 0
    for e in events:
        for j in range(prev, e):
            pairs.append((e, j))
            tags.append(CHAIN)
        prev = e
    for grp in sc.tie_groups:
        for a, b in zip(grp[:-1], grp[1:]):
            pairs.append((a, b))
            tags.append(TIE)
    return _from_pairs(Xs, pairs, tags)


def full_constraints(sc: SortedCohort, X) -> ConstraintMatrix:
    """Every pair ``(i, j)`` with ``i`` an event and ``j != i`` at risk at ``y_i``."""
    Xs = _design(sc, X)
    pairs = [(i, j) for i in sc.uncensored for j in range(sc.rho[i] + 1) if j != i]
    return _from_pairs(Xs, pairs, [PAIR] * len(pairs))


def _lp_primal(R, eps, rule) -> float:
    # b = b+ - b-, both in [0, 1]: the origin is a feasible vertex
    k, p = R.shape
    c = R.sum(axis=0)
    A = np.zeros((k + 2 * p, 2 * p))
    A[:k, :p] = -R
    A[:k, p:] = R
    A[k:, :] = np.eye(2 * p)
    b = np.concatenate([np.zeros(k), np.ones(2 * p)])
    return simplex_max(np.concatenate([c, -c]), A, b, eps=eps, rule=rule).value


def _lp_dual(R, eps, rule) -> float:
    # min_{y >= 0} |c + R^T y|_1 written as  -R^T y + u - v = c,  y, u, v >= 0;
    # u_j (or v_j when c_j < 0) is a feasible starting basis
    k, p = R.shape
    c = R.sum(axis=0)
    sg = np.where(c >= 0, 1.0, -1.0)
    A = np.hstack([-R.T, np.eye(p), -np.eye(p)]) * sg[:, None]
    basis = np.where(sg > 0, k + np.arange(p), k + p + np.arange(p))
    cost = np.concatenate([np.zeros(k), -np.ones(2 * p)])
    return -simplex_max_eq(cost, A, sg * c, basis, eps=eps, rule=rule).value


def lp_max(D, eps: float = 1e-9, rule: str = "dantzig", form: str = "dual") -> float:
    """Optimal value of the box-constrained direction LP for rows ``D``.

    ``form="dual"`` (default) solves the equivalent dual
    ``min_{y >= 0} |sum_r r + R^T y|_1``, which has only ``p`` equality
    rows and a feasible slack basis; strong duality gives the same value.
    ``form="primal"`` pivots on the box LP itself, which is heavily
    degenerate at ``b = 0`` and much slower. Raises
    :class:`coxht.simplex.LPError` if the pivot budget runs out.
    """
    R = D.rows if isinstance(D, ConstraintMatrix) else np.atleast_2d(np.asarray(D, dtype=float))
    if R.shape[0] == 0:
        raise ValueError("constraint set is empty")
    R = R[np.any(R != 0.0, axis=1)]
    if R.shape[0] == 0:
        return 0.0
    if form == "dual":
        value = _lp_dual(R, eps, rule)
    elif form == "primal":
        value = _lp_primal(R, eps, rule)
    else:
        raise ValueError("form must be 'dual' or 'primal'")
    return max(0.0, value)


def check_existence(sc: SortedCohort, X, tol: float = 1e-9, rule: str = "dantzig",
                    warn: bool = True) -> ExistenceResult:
    """LP verdict on the reduced constraints plus a rank probe.

    The rank probe (do the rows span ``R^p``?) is reported but does not
    enter ``exists``. A cohort without events has no constraints and is
    reported as existing with ``lp_value = 0``.
    """
    Xs = _design(sc, X)
    p = Xs.shape[1]
    if sc.uncensored.size == 0:
        return ExistenceResult(True, 0.0, 0, 0, False)
    D = build_reduced_constraints(sc, X)
    value = lp_max(D, rule=rule) if D.count else 0.0
    rank = int(np.linalg.matrix_rank(D.rows)) if D.count else 0
    if warn and rank < p:
        warnings.warn(f"constraint rows span {rank} < p={p} dimensions",
                      RankDeficientWarning, stacklevel=2)
    return ExistenceResult(exists=value <= tol, lp_value=value, rows=D.count,
                           rank=rank, full_rank=rank == p)


def mple_exists(sc: SortedCohort, X, tol: float = 1e-9) -> bool:
    return check_existence(sc, X, tol=tol, warn=False).exists


def brute_force_exists(sc: SortedCohort, X, tol: float = 1e-9) -> bool:
    """Same verdict from the unreduced pair set (small cohorts only).

    Deliberately takes the other route through the LP (primal box form,
    Bland's rule) so it shares no pivoting path with :func:`mple_exists`.
    """
    if sc.n > 12:
        raise ValueError("brute-force check is limited to n <= 12")
    D = full_constraints(sc, X)
    if D.count == 0:
        return True
    return lp_max(D, rule="bland", form="primal") <= tol
