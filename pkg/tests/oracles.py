"""Independent reference computations shared by the unit and acceptance tests.

Each oracle takes a different route from the library code: brute-force
enumeration, dense linear algebra or plain scalar bisection.
"""

import itertools
import math

import numpy as np
from scipy.optimize import nnls

from coxht.model import ReducedCohort, sort_cohort
from coxht.numcore import HalfspaceSet
from coxht.state import EnvelopeContext


def active_set_projection(z, hs: HalfspaceSet):
    """Projection onto ``{rows @ m >= 0}`` by enumerating every active set.

    For each subset the equality-constrained projection is formed with a
    pseudo-inverse; the closest feasible candidate is the projection.
    """
    z = np.asarray(z, dtype=float)
    rows = hs.all_rows()
    k = rows.shape[0]
    if k == 0:
        return z.copy()
    best, best_d = None, np.inf
    for size in range(k + 1):
        for act in itertools.combinations(range(k), size):
            if act:
                A = rows[list(act)]
                m = z - A.T @ np.linalg.pinv(A @ A.T) @ (A @ z)
            else:
                m = z.copy()
            if np.min(rows @ m) >= -1e-10:
                d = float(np.sum((z - m) ** 2))
                if d < best_d - 1e-13:
                    best, best_d = m, d
    return best


def polar_projection(z, hs: HalfspaceSet):
    """Projection onto the polar cone ``{-rows.T @ lam : lam >= 0}`` by NNLS."""
    rows = hs.all_rows()
    if rows.shape[0] == 0:
        return np.zeros_like(z)
    lam, _ = nnls(-rows.T, np.asarray(z, dtype=float))
    return -rows.T @ lam


def direct_gn(y, delta, u):
    """``sum_i Delta_i log((1/n) sum_{Y_j >= Y_i} e^{u_j})`` written out pairwise."""
    n = len(y)
    tot = 0.0
    for i in range(n):
        if delta[i]:
            tot += math.log(sum(math.exp(u[j]) for j in range(n) if y[j] >= y[i]) / n)
    return tot


def direct_gn_derivatives(y, delta, u):
    n = len(y)
    g = np.zeros(n)
    H = np.zeros((n, n))
    for i in range(n):
        if not delta[i]:
            continue
        risk = np.array([y[j] >= y[i] for j in range(n)], dtype=float)
        w = risk * np.exp(u)
        w = w / w.sum()
        g += w
        H += np.diag(w) - np.outer(w, w)
    return g, H


def dense_newton_prox(y, delta, xi, c, iters=100):
    """Damped dense Newton on ``G(u) + (c/2)|u - xi|^2``."""
    u = np.array(xi, dtype=float)

    def psi(v):
        return direct_gn(y, delta, v) + 0.5 * c * np.sum((v - xi) ** 2)

    for _ in range(iters):
        g, H = direct_gn_derivatives(y, delta, u)
        g = g + c * (u - xi)
        if np.linalg.norm(g) < 1e-14:
            break
        step = np.linalg.solve(H + c * np.eye(len(u)), -g)
        t = 1.0
        while psi(u + t * step) > psi(u) + 1e-4 * t * (g @ step) and t > 1e-12:
            t *= 0.5
        u = u + t * step
    return u


def small_context(rng, n, kappa=1.0, ties=False):
    """Random sorted context of size ``n`` with independent ``q`` and ``h``."""
    y = rng.integers(0, max(2, n // 2), size=n).astype(float) if ties else rng.exponential(size=n)
    d = rng.integers(0, 2, size=n)
    d[0] = 1
    sc = sort_cohort(y, d)
    q = rng.normal(size=n)
    red = ReducedCohort(y=sc.y, q1=q, delta=sc.delta, kappa=kappa, sorted=sc)
    return EnvelopeContext(red, rng.normal(size=n))


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
