"""Partial likelihood, Newton fitting and the classical diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import SortedCohort


class SingularInformationError(np.linalg.LinAlgError):
    """Observed information is singular (e.g. constant or duplicated columns)."""


@dataclass
class FitResult:
    beta_hat: np.ndarray
    loglik: float
    grad_norm: float
    iterations: int
    converged: bool
    diverged: bool


@dataclass
class LRTResult:
    statistic: float
    ok: bool
    full: FitResult
    restricted: FitResult


def _sorted_design(sc: SortedCohort, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != sc.n:
        raise ValueError(f"X has {X.shape[0]} rows, cohort has {sc.n}")
    return X[sc.order]


def _log_risk_sums(eta, rho):
    """log sum_{j <= rho[i]} exp(eta_j), stabilised per prefix."""
    return np.logaddexp.accumulate(eta)[rho]


def partial_loglik(sc: SortedCohort, X, beta) -> float:
    """(1/n) sum_i Delta_i [eta_i - log((1/n) sum_{Y_j >= Y_i} exp(eta_j))]."""
    Xs = _sorted_design(sc, X)
    eta = Xs @ np.atleast_1d(np.asarray(beta, dtype=float))
    return _loglik_sorted(eta, sc)


def _loglik_sorted(eta, sc: SortedCohort) -> float:
    n = sc.n
    if not np.any(sc.delta):
        return 0.0
    log_s0 = _log_risk_sums(eta, sc.rho)
    d = sc.delta.astype(bool)
    return float(np.sum(eta[d] - (log_s0[d] - math.log(n))) / n)


def _risk_first(rho: np.ndarray) -> np.ndarray:
    # first i whose risk set contains j, i.e. min{i : rho[i] >= j}
    return np.searchsorted(rho, np.arange(rho.shape[0]), side="left")


def _derivatives(Xs, eta, sc: SortedCohort, need_info=True):
    """Gradient and observed information of L in sorted coordinates."""
    n, p = Xs.shape
    d = sc.delta.astype(float)
    shift = np.max(eta)
    w = np.exp(eta - shift)
    s0 = np.cumsum(w)[sc.rho]
    if np.any(s0[d > 0] < 1e-250) or not np.all(np.isfinite(s0)):
        return _derivatives_loop(Xs, eta, sc, need_info)
    # non-finite results from censored rows' tiny sums are caught below
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        s1 = np.cumsum(w[:, None] * Xs, axis=0)[sc.rho]
        xbar = s1 / s0[:, None]
        grad = (d @ (Xs - xbar)) / n
        if not need_info:
            if not np.all(np.isfinite(grad)):
                return _derivatives_loop(Xs, eta, sc, need_info)
            return grad, None
        inv_s0 = np.where(d > 0, 1.0 / s0, 0.0)
        tail = np.cumsum(inv_s0[::-1])[::-1]
        c = tail[_risk_first(sc.rho)]
        info = (Xs.T * (w * c)) @ Xs - (xbar.T * d) @ xbar
    info = 0.5 * (info + info.T) / n
    if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(info))):
        # tiny risk-set sums overflow the fast assembly
        return _derivatives_loop(Xs, eta, sc, need_info)
    return grad, info


def _derivatives_loop(Xs, eta, sc: SortedCohort, need_info=True):
    # exact but O(n^2 p); only reached when a risk-set sum underflows
    n, p = Xs.shape
    grad = np.zeros(p)
    info = np.zeros((p, p))
    for i in np.flatnonzero(sc.delta):
        r = slice(0, sc.rho[i] + 1)
        e = eta[r]
        w = np.exp(e - e.max())
        w /= w.sum()
        xr = Xs[r]
        xbar = w @ xr
        grad += Xs[i] - xbar
        if need_info:
            xc = xr - xbar
            info += (xc.T * w) @ xc
    return grad / n, (info / n if need_info else None)


def score_and_information(sc: SortedCohort, X, beta):
    """Gradient of L and ``-d^2 L`` at ``beta``."""
    Xs = _sorted_design(sc, X)
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    return _derivatives(Xs, Xs @ beta, sc)


def _is_singular(info) -> bool:
    if info.size == 0:
        return True
    ev = np.linalg.eigvalsh(info)
    return not (ev[-1] > 0 and ev[0] > 1e-12 * ev[-1])


def fit_mple(sc: SortedCohort, X, init=None, tol: float = 1e-9,
             max_iter: int = 100, divergence_factor: float = 1e3) -> FitResult:
    """Maximize the partial likelihood by damped Newton.

    Each Newton direction is halved until the likelihood does not decrease
    and is doubled while it keeps increasing, so iterates run off quickly
    along a direction of monotone likelihood. ``converged`` requires
    ``|grad|_inf <= tol`` and a negligible Newton step; ``diverged`` is set
    once ``|beta|_2 >= divergence_factor * sqrt(p)``.

    Raises :class:`SingularInformationError` when the information at the
    starting point is singular.
    """
    Xs = _sorted_design(sc, X)
    n, p = Xs.shape
    beta = np.zeros(p) if init is None else np.array(init, dtype=float)
    if beta.shape != (p,) or not np.all(np.isfinite(beta)):
        raise ValueError("init must be a finite vector of length p")
    limit = divergence_factor * math.sqrt(p)

    eta = Xs @ beta
    L = _loglik_sorted(eta, sc)
    grad, info = _derivatives(Xs, eta, sc)
    if _is_singular(info):
        raise SingularInformationError("observed information is singular at the start point")

    converged = diverged = False
    it = 0
    for it in range(1, max_iter + 1):
        if not (np.all(np.isfinite(info)) and np.all(np.isfinite(grad))):
            break
        try:
            with warnings.catch_warnings():
                # near-singular steps are expected along separating directions
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                step = linalg.solve(info, grad, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            step = np.linalg.lstsq(info, grad, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            step = grad.copy()
        g_inf = float(np.max(np.abs(grad)))
        if g_inf <= tol and np.max(np.abs(step)) <= 1e-6 * (1.0 + np.max(np.abs(beta))):
            converged = True
            break

        t, cand, L_cand = 1.0, None, -np.inf
        slack = 1e-13 * (1.0 + abs(L))
        for _ in range(60):
            b_try = beta + t * step
            L_try = _loglik_sorted(Xs @ b_try, sc)
            if L_try >= L - slack:
                cand, L_cand = b_try, L_try
                break
            t *= 0.5
        if cand is None:
            # no ascent along the Newton direction: stationary to precision
            converged = g_inf <= math.sqrt(tol)
            break
        if t == 1.0:
            while np.linalg.norm(cand) < limit:
                b_try = beta + 2.0 * t * step
                L_try = _loglik_sorted(Xs @ b_try, sc)
                if not L_try > L_cand:
                    break
                t *= 2.0
                cand, L_cand = b_try, L_try

        beta, L = cand, L_cand
        if np.linalg.norm(beta) >= limit:
            diverged = True
            eta = Xs @ beta
            grad, _ = _derivatives(Xs, eta, sc, need_info=False)
            break
        eta = Xs @ beta
        grad, info = _derivatives(Xs, eta, sc)

    return FitResult(beta_hat=beta, loglik=float(L),
                     grad_norm=float(np.max(np.abs(grad))) if grad.size else 0.0,
                     iterations=it, converged=converged and not diverged,
                     diverged=diverged)


def fisher_std(sc: SortedCohort, X, beta) -> np.ndarray:
    """Classical standard errors ``sqrt(diag((n * I)^-1))`` with ``I = -d^2 L``."""
    _, info = score_and_information(sc, X, beta)
    if _is_singular(info):
        raise SingularInformationError("observed information is singular")
    cov = linalg.inv(sc.n * info)
    return np.sqrt(np.diag(cov))


def lrt_stat(sc: SortedCohort, X, j: int, tol: float = 1e-9,
             full: FitResult | None = None) -> LRTResult:
    """Partial likelihood ratio statistic ``2n (L(full) - L(beta_j = 0))``.

    ``ok`` is false when either fit failed to converge; the statistic is then
    NaN.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = X.shape[1]
    if not 0 <= j < p:
        raise IndexError(f"coordinate {j} outside [0, {p})")
    if full is None:
        full = fit_mple(sc, X, tol=tol)
    keep = np.delete(np.arange(p), j)
    if keep.size == 0:
        beta_r = np.zeros(0)
        restricted = FitResult(beta_hat=np.zeros(p), loglik=partial_loglik(sc, X, np.zeros(p)),
                               grad_norm=0.0, iterations=0, converged=True, diverged=False)
    else:
        init = full.beta_hat[keep] if full.converged else None
        sub = fit_mple(sc, X[:, keep], init=init, tol=tol)
        beta_r = np.zeros(p)
        beta_r[keep] = sub.beta_hat
        restricted = FitResult(beta_hat=beta_r, loglik=sub.loglik, grad_norm=sub.grad_norm,
                               iterations=sub.iterations, converged=sub.converged,
                               diverged=sub.diverged)
    ok = full.converged and restricted.converged
    stat = max(0.0, 2.0 * sc.n * (full.loglik - restricted.loglik)) if ok else float("nan")
    return LRTResult(statistic=stat, ok=ok, full=full, restricted=restricted)
