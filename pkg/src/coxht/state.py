"""Scalar state equations for the MPLE in the proportional regime.

The constants ``(a*, b*, r*)`` solve

    min_{a, b > 0} max_{r > 0}  F(a, b, r),
    F = (1/n) M(xi; b sqrt(delta) / r) - (b sqrt(delta) / (2 r)) (1 - s0)
        + kappa a s1 - r sqrt(delta) b / 2,
    xi = kappa a q + b h + (sqrt(delta) b / r) Delta,

where ``M(xi; t) = min_u G(u) + |u - xi|^2 / (2 t)`` is the Moreau envelope
of the negative log partial likelihood sum
``G(u) = sum_i Delta_i log((1/n) sum_{y_j >= y_i} exp(u_j))``, evaluated on
one large reduced cohort ``(y, q, Delta)`` with an independent Gaussian
vector ``h``. ``s0 = E[S(C | kappa Z)]`` and ``s1 = E[S(C | kappa Z) Z]``
with ``S(c | x) = exp(-lambda c e^x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelConfig, ReducedCohort, reduce_to_1d
from .numcore import (NonFiniteObjectiveError, RngStream, as_generator,
                      golden_section_extremum, nelder_mead_min, solve_scalar_root)


class StateSolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# censoring expectations
# ---------------------------------------------------------------------------

@dataclass
class StateConstants:
    s0: float
    s1: float
    kappa: float
    delta: float = float("nan")
    quad_error: float = 0.0


def _censor_nodes(lo, hi, nodes):
    if hi == lo:
        return np.array([lo]), np.array([1.0])
    x, wx = np.polynomial.legendre.leggauss(nodes)
    # uniform density times the half-width
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * wx


def _integrate(z, wz, kappa, lam, c, wc):
    surv = np.exp(-lam * np.outer(np.exp(kappa * z), c))   # (z, c)
    inner = surv @ wc
    return float(wz @ inner), float(wz @ (inner * z))


def _censor_quadrature(kappa, lam, lo, hi, nodes):
    z, wz = np.polynomial.hermite_e.hermegauss(nodes)
    wz = wz / math.sqrt(2.0 * math.pi)
    c, wc = _censor_nodes(lo, hi, nodes)
    return _integrate(z, wz, kappa, lam, c, wc)


def _censor_quadrature_panels(kappa, lam, lo, hi, panels, order=32, zmax=12.0):
    # composite Gauss-Legendre in z for large kappa, where exp(-c e^{kappa z})
    # switches off over a window of width ~1/kappa that Hermite nodes miss
    x, wx = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-zmax, zmax, panels + 1)
    half = 0.5 * np.diff(edges)
    z = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    wz = (half[:, None] * wx[None, :]).ravel() * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    c, wc = _censor_nodes(lo, hi, order)
    return _integrate(z, wz, kappa, lam, c, wc)


def censoring_expectations(kappa: float, lam: float = 1.0, censor_lo: float = 1.0,
                           censor_hi: float = 2.0, nodes: int = 64,
                           delta: float = float("nan"), tol: float = 1e-10) -> StateConstants:
    """``s0`` and ``s1`` by Gauss-Hermite x Gauss-Legendre tensor quadrature.

    The node count doubles from ``nodes`` (up to 256) until both values move
    by at most ``tol``; the last change is stored as ``quad_error``. If
    Hermite nodes have not settled by then (large ``kappa``), composite
    Gauss-Legendre panels on ``|z| <= 12`` take over, doubling the panel
    count the same way. ``s1`` is exactly zero when ``kappa == 0``.
    """
    if nodes < 16:
        raise ValueError("need at least 16 quadrature nodes")
    if lam <= 0 or not 0 < censor_lo <= censor_hi:
        raise ValueError("need lambda > 0 and 0 < censor_lo <= censor_hi")
    args = (kappa, lam, censor_lo, censor_hi)
    s0, s1 = _censor_quadrature(*args, nodes)
    err = float("inf")
    k = nodes
    while k < 256 and err > tol:
        k = min(2 * k, 256)
        t0, t1 = _censor_quadrature(*args, k)
        err = max(abs(t0 - s0), abs(t1 - s1))
        s0, s1 = t0, t1
    panels = 8
    if err > tol:
        s0, s1 = _censor_quadrature_panels(*args, panels)
    while err > tol and panels < 4096:
        panels *= 2
        t0, t1 = _censor_quadrature_panels(*args, panels)
        err = max(abs(t0 - s0), abs(t1 - s1))
        s0, s1 = t0, t1
    if kappa == 0:
        s1 = 0.0
    return StateConstants(s0=s0, s1=s1, kappa=float(kappa), delta=float(delta),
                          quad_error=err)


# ---------------------------------------------------------------------------
# the partial-likelihood sum G and its proximal map
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeContext:
    """One realization ``(y, q, Delta)`` (sorted) plus an independent ``h``."""

    reduced: ReducedCohort
    h: np.ndarray
    first: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if self.h.shape != (self.n,):
            raise ValueError("h must match the cohort size")
        sc = self.reduced.sorted
        # first[j]: first sorted position whose risk set contains j
        self.first = np.searchsorted(sc.rho, np.arange(self.n), side="left")

    @property
    def n(self) -> int:
        return self.reduced.y.shape[0]

    @property
    def q(self) -> np.ndarray:
        return self.reduced.q1

    @property
    def delta(self) -> np.ndarray:
        return self.reduced.delta.astype(float)

    @property
    def rho(self) -> np.ndarray:
        return self.reduced.sorted.rho


def make_context(config: ModelConfig, n_rep: int, stream: RngStream) -> EnvelopeContext:
    red = reduce_to_1d(config, n_rep, stream.child(0))
    h = as_generator(stream.child(1)).standard_normal(n_rep)
    return EnvelopeContext(red, h)


def _log_risk(ctx, u):
    return np.logaddexp.accumulate(u)[ctx.rho]


def gn_value(ctx: EnvelopeContext, u) -> float:
    d = ctx.reduced.delta.astype(bool)
    if not d.any():
        return 0.0
    L = _log_risk(ctx, u)
    return float(np.sum(L[d]) - d.sum() * math.log(ctx.n))


def _gn_grad_parts(ctx, u):
    d = ctx.reduced.delta.astype(bool)
    L = _log_risk(ctx, u)
    negL = np.where(d, -L, -np.inf)
    # log sum_{i >= k, event} exp(-L_i), for every k
    tail = np.logaddexp.accumulate(negL[::-1])[::-1]
    grad = np.exp(u + tail[ctx.first])
    return grad, L


def gn_grad(ctx: EnvelopeContext, u) -> np.ndarray:
    if not ctx.reduced.delta.any():
        return np.zeros(ctx.n)
    return _gn_grad_parts(ctx, u)[0]


def _hessp_factory(ctx, u, grad, L):
    d = ctx.reduced.delta.astype(bool)
    shift = float(np.max(u))
    w = np.exp(u - shift)
    S = np.cumsum(w)[ctx.rho]
    S = np.where(S > 0, S, np.finfo(float).tiny)
    Lmin = float(np.min(L[d]))
    e = np.where(d, np.exp(Lmin - L), 0.0)
    den = np.cumsum(e[::-1])[::-1][ctx.first]
    den = np.where(den > 0, den, np.finfo(float).tiny)

    def hessp(v):
        A = np.cumsum(w * v)[ctx.rho] / S          # risk-set weighted mean of v
        num = np.cumsum((e * A)[::-1])[::-1][ctx.first]
        return grad * (v - num / den)

    return hessp


@dataclass
class ProxResult:
    u: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool


def _pcg(hessp, rhs, diag, rtol, maxiter):
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = r / diag
    p = z.copy()
    rz = r @ z
    target = rtol * np.linalg.norm(rhs)
    for _ in range(maxiter):
        Ap = hessp(p)
        pAp = p @ Ap
        if pAp <= 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= target:
            break
        z = r / diag
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def prox_Gn(ctx: EnvelopeContext, xi, c: float, tol: float = 1e-8,
            max_iter: int = 2000, init=None) -> ProxResult:
    """Minimizer of ``Psi(u) = G(u) + (c/2)|u - xi|^2``.

    Truncated Newton: each direction comes from preconditioned CG with an
    O(n) Hessian-vector product, followed by Armijo backtracking. Stops
    when ``|grad Psi|_2 <= tol * max(1, |xi|)``; on the iteration cap the
    best iterate is returned with ``converged=False``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (ctx.n,):
        raise ValueError("xi has the wrong length")
    if not ctx.reduced.delta.any():
        return ProxResult(xi.copy(), 0.0, 0, True)
    target = tol * max(1.0, float(np.linalg.norm(xi)))

    def psi(v):
        return gn_value(ctx, v) + 0.5 * c * float(np.sum((v - xi) ** 2))

    u, f = xi.copy(), psi(xi)
    if init is not None:
        init = np.asarray(init, dtype=float)
        f_init = psi(init) if np.all(np.isfinite(init)) else np.inf
        if f_init < f:
            u, f = init.copy(), f_init
    gG, L = _gn_grad_parts(ctx, u)
    g = gG + c * (u - xi)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > target and it < max_iter:
        it += 1
        hG = _hessp_factory(ctx, u, gG, L)
        diag = gG + c
        step = _pcg(lambda v: hG(v) + c * v, -g, diag,
                    rtol=min(0.5, math.sqrt(gnorm)), maxiter=200)
        slope = float(g @ step)
        if not slope < 0:
            step, slope = -g, -gnorm * gnorm
        t = 1.0
        accepted = False
        while t >= 1e-10:
            u_new = u + t * step
            f_new = psi(u_new)
            if f_new <= f + 1e-4 * t * slope:
                accepted = True
                break
            if abs(f_new - f) <= 1e-12 * max(1.0, abs(f)):
                # objective differences are at rounding level: fall back to
                # accepting the step if it shrinks the gradient
                gG_new, L_new = _gn_grad_parts(ctx, u_new)
                if np.linalg.norm(gG_new + c * (u_new - xi)) < gnorm:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        if not np.isfinite(f_new):
            raise NonFiniteObjectiveError(u_new, f_new)
        u, f = u_new, f_new
        gG, L = _gn_grad_parts(ctx, u)
        g = gG + c * (u - xi)
        gnorm = float(np.linalg.norm(g))
    return ProxResult(u, gnorm, it, gnorm <= target)


def moreau_envelope(ctx: EnvelopeContext, xi, inv_c: float, tol: float = 1e-8,
                    init=None, return_prox: bool = False):
    """``min_u G(u) + |u - xi|^2 / (2 inv_c)``."""
    if not inv_c > 0:
        raise ValueError("inv_c must be positive")
    xi = np.asarray(xi, dtype=float)
    res = prox_Gn(ctx, xi, 1.0 / inv_c, tol=tol, init=init)
    value = gn_value(ctx, res.u) + float(np.sum((res.u - xi) ** 2)) / (2.0 * inv_c)
    return (value, res) if return_prox else value


# ---------------------------------------------------------------------------
# the saddle objective
# ---------------------------------------------------------------------------

def assemble_xi(ctx: EnvelopeContext, kappa, delta, a, b, r) -> np.ndarray:
    return kappa * a * ctx.q + b * ctx.h + (math.sqrt(delta) * b / r) * ctx.delta


CENTERINGS = ("population", "sample")


class SaddleObjective:
    """``F(a, b, r)`` averaged over one or more contexts, with prox warm starts.

    ``centering="population"`` uses the limits ``1 - s0`` and ``s1`` for the
    terms linear in ``Delta``. ``centering="sample"`` uses the same
    context's averages instead: ``mean(Delta)``, ``-mean(Delta q)``, plus
    the cross term ``-b mean(Delta h)`` whose limit is zero. Both have the
    same limit as ``n_rep`` grows, but the sample form cancels the leading
    fluctuation of the envelope term, so solutions vary far less across
    contexts.

    Warm starts change only the starting point of a strongly convex inner
    solve, so values agree with cold evaluations to the prox tolerance.
    """

    def __init__(self, contexts, consts: StateConstants, prox_tol: float = 1e-8,
                 centering: str = "population"):
        if isinstance(contexts, EnvelopeContext):
            contexts = [contexts]
        self.contexts = list(contexts)
        if not self.contexts:
            raise ValueError("need at least one context")
        if not consts.delta > 0:
            raise ValueError("StateConstants.delta must be positive")
        if centering not in CENTERINGS:
            raise ValueError(f"centering must be one of {CENTERINGS}")
        self.consts = consts
        self.prox_tol = prox_tol
        self.centering = centering
        # per context: the event fraction (1 - s0), the s1 term and the
        # Delta-h cross term, either as limits or as sample averages
        if centering == "population":
            self._lin = [(1.0 - consts.s0, consts.s1, 0.0)] * len(self.contexts)
        else:
            self._lin = [(float(np.mean(c.delta)), -float(np.mean(c.delta * c.q)),
                          float(np.mean(c.delta * c.h))) for c in self.contexts]
        self._warm = [None] * len(self.contexts)
        self.evaluations = 0

    def _terms(self, k, a, b, r):
        ctx = self.contexts[k]
        cs = self.consts
        sd = math.sqrt(cs.delta)
        xi = assemble_xi(ctx, cs.kappa, cs.delta, a, b, r)
        inv_c = b * sd / r
        init = None
        if self._warm[k] is not None:
            # carry the previous offset u* - xi over to the new centre
            init = xi + self._warm[k]
        env, res = moreau_envelope(ctx, xi, inv_c, tol=self.prox_tol, init=init,
                                   return_prox=True)
        self._warm[k] = res.u - xi
        return env, res, xi

    def value(self, a: float, b: float, r: float) -> float:
        if not (b > 0 and r > 0):
            raise ValueError("need b > 0 and r > 0")
        cs = self.consts
        sd = math.sqrt(cs.delta)
        tot = 0.0
        for k, ctx in enumerate(self.contexts):
            env, _, _ = self._terms(k, a, b, r)
            ev, s1, dh = self._lin[k]
            tot += env / ctx.n - (b * sd / (2.0 * r)) * ev + cs.kappa * a * s1 - b * dh
        val = tot / len(self.contexts) - r * sd * b / 2.0
        self.evaluations += 1
        if not math.isfinite(val):
            raise NonFiniteObjectiveError(np.array([a, b, r]), val)
        return val

    def gradient(self, a: float, b: float, r: float) -> np.ndarray:
        """Analytic ``(dF/da, dF/db, dF/dr)`` from the envelope identity
        ``grad_xi M = c (xi - u*)`` and ``dM/dc = |u* - xi|^2 / 2``."""
        cs = self.consts
        sd = math.sqrt(cs.delta)
        c = r / (b * sd)
        ga = gb = gr = 0.0
        for k, ctx in enumerate(self.contexts):
            _, res, xi = self._terms(k, a, b, r)
            g_xi = c * (xi - res.u)
            half_sq = 0.5 * float(np.sum((res.u - xi) ** 2))
            dc_db, dc_dr = -r / (b * b * sd), 1.0 / (b * sd)
            ev, s1, dh = self._lin[k]
            ga += (g_xi @ (cs.kappa * ctx.q)) / ctx.n + cs.kappa * s1
            gb += ((g_xi @ (ctx.h + (sd / r) * ctx.delta) + half_sq * dc_db) / ctx.n
                   - (sd / (2.0 * r)) * ev - dh)
            gr += ((g_xi @ (-(sd * b / r ** 2) * ctx.delta) + half_sq * dc_dr) / ctx.n
                   + (b * sd / (2.0 * r * r)) * ev)
        m = len(self.contexts)
        ga = ga / m
        gb = gb / m - r * sd / 2.0
        gr = gr / m - sd * b / 2.0
        return np.array([ga, gb, gr])


def saddle_objective(ctx, consts: StateConstants, a: float, b: float, r: float,
                     centering: str = "population") -> float:
    return SaddleObjective(ctx, consts, centering=centering).value(a, b, r)


# ---------------------------------------------------------------------------
# min-max solve
# ---------------------------------------------------------------------------

@dataclass
class StateSolution:
    a_star: float
    b_star: float
    r_star: float
    v_star: float
    saddle_value: float
    residuals: np.ndarray
    converged: bool
    starts: int = 1
    evaluations: int = 0

    def to_dict(self) -> dict:
        return dict(a_star=self.a_star, b_star=self.b_star, r_star=self.r_star,
                    v_star=self.v_star, saddle_value=self.saddle_value,
                    residuals=[float(x) for x in self.residuals],
                    converged=bool(self.converged))


def _max_over_r(obj: SaddleObjective, a, b, log_r_lo, log_r_hi, scan=16, tol=1e-7):
    grid = np.linspace(log_r_lo, log_r_hi, scan)
    vals = np.array([obj.value(a, b, math.exp(s)) for s in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, scan - 1)]
    s, v = golden_section_extremum(lambda s: obj.value(a, b, math.exp(s)), lo, hi,
                                   tol=tol, sense="max")
    if v < vals[k]:
        s, v = grid[k], vals[k]
    return s, v


def fd_residuals(obj: SaddleObjective, a, b, r, rel_step: float = 1e-4) -> np.ndarray:
    """Central finite differences of ``F`` in ``a``, ``b`` and ``r``."""
    x = np.array([a, b, r], dtype=float)
    out = np.empty(3)
    for i in range(3):
        h = rel_step * max(1.0, abs(x[i])) if i == 0 else rel_step * x[i]
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (obj.value(*xp) - obj.value(*xm)) / (2.0 * h)
    return out


def solve_state_equations(ctx, consts: StateConstants, init=(1.0, 1.0, 1.0),
                          tol: float = 1e-5, residual_tol: float = 1e-3,
                          n_starts: int = 3, log_r_halfwidth: float = 3.0,
                          max_iter: int = 400, centering: str = "sample") -> StateSolution:
    """Nested min-max: golden-section over ``log r`` inside Nelder-Mead over ``(a, log b)``.

    The inner maximum is located by a 16-point scan of
    ``log r0 +- log_r_halfwidth`` (re-centred on the outer iterate's last
    maximizer) followed by golden section on the bracketing cells. The
    solve is declared converged when Nelder-Mead meets ``tol`` and the
    finite-difference residuals of ``F`` in ``(a, b, r)`` are at most
    ``residual_tol``. Failing starts are retried from perturbed points;
    the best attempt is returned either way. ``centering`` is passed to
    :class:`SaddleObjective`.
    """
    a0, b0, r0 = (float(v) for v in init)
    if not (b0 > 0 and r0 > 0):
        raise ValueError("initial b and r must be positive")
    obj = SaddleObjective(ctx, consts, centering=centering)
    sd = math.sqrt(consts.delta)
    state = {"log_r": math.log(r0)}

    def outer(x):
        a, b = float(x[0]), math.exp(float(x[1]))
        c = state["log_r"]
        s, v = _max_over_r(obj, a, b, c - log_r_halfwidth, c + log_r_halfwidth)
        state["log_r"] = s
        state[(a, b)] = s
        return v

    perturb = [(0.0, 0.0), (0.25, 0.4), (-0.2, -0.4)]
    best = None
    for k in range(max(1, n_starts)):
        da, dlb = perturb[k % len(perturb)]
        x0 = np.array([a0 + da, math.log(b0) + dlb])
        state["log_r"] = math.log(r0)
        try:
            x, fval, ok = nelder_mead_min(outer, x0, tol=tol, max_iter=max_iter)
        except NonFiniteObjectiveError:
            continue
        a, b = float(x[0]), math.exp(float(x[1]))
        s, fval = _max_over_r(obj, a, b, state["log_r"] - 0.5, state["log_r"] + 0.5,
                              tol=1e-9)
        r = math.exp(s)
        res = fd_residuals(obj, a, b, r)
        conv = bool(ok and np.max(np.abs(res)) <= residual_tol)
        sol = StateSolution(a_star=a, b_star=b, r_star=r, v_star=1.0 / (b * sd),
                            saddle_value=fval, residuals=res, converged=conv,
                            starts=k + 1, evaluations=obj.evaluations)
        if best is None or (conv and not best.converged) or (
                conv == best.converged and np.max(np.abs(res)) < np.max(np.abs(best.residuals))):
            best = sol
        if conv:
            break
    if best is None:
        raise StateSolverError("every start hit a non-finite objective")
    return best


def solve_for_config(config: ModelConfig, n_rep: int = 2000, stream: RngStream | None = None,
                     n_avg: int = 1, nodes: int = 64, **kw) -> StateSolution:
    """Build constants and ``n_avg`` contexts for ``config`` and solve."""
    return solve_for_params(config.kappa, config.delta, config.baseline_rate,
                            config.censor_lo, config.censor_hi, n_rep, stream,
                            n_avg=n_avg, nodes=nodes, **kw)


def solve_for_params(kappa: float, delta: float, lam: float = 1.0, censor_lo: float = 1.0,
                     censor_hi: float = 2.0, n_rep: int = 2000,
                     stream: RngStream | None = None, n_avg: int = 1, nodes: int = 64,
                     **kw) -> StateSolution:
    """Same as :func:`solve_for_config` for an explicit ``delta`` (no ``n``, ``p``)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    stream = stream if stream is not None else RngStream(0)
    consts = censoring_expectations(kappa, lam, censor_lo, censor_hi, nodes=nodes, delta=delta)
    config = ModelConfig(n=1, p=1, kappa=kappa, baseline_rate=lam,
                         censor_lo=censor_lo, censor_hi=censor_hi)
    ctxs = [make_context(config, n_rep, stream.child(k)) for k in range(n_avg)]
    return solve_state_equations(ctxs, consts, **kw)


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

def k_solve(b1: float, b2: float, b3: float) -> float:
    """Positive ``u`` with ``b3 (log u - b1) = -b2 u`` (``b3 > 0``, ``b2 >= 0``).

    Solved in ``s = log u``: ``f(s) = b3 (s - b1) + b2 e^s`` is increasing,
    non-negative at ``s = b1`` and non-positive at ``b1 - b2 e^{b1} / b3``.
    """
    if not b3 > 0 or b2 < 0:
        raise ValueError("no unique positive root unless b3 > 0 and b2 >= 0")
    if b2 == 0:
        return math.exp(b1)

    def f(s):
        return b3 * (s - b1) + b2 * math.exp(s)

    lo = b1 - b2 * math.exp(b1) / b3
    s = solve_scalar_root(f, lo, b1, tol=1e-15)
    for _ in range(3):            # Newton polish
        fs = f(s)
        s -= fs / (b3 + b2 * math.exp(s))
    return math.exp(s)


def theoretical_errors(solution, kappa: float) -> tuple[float, float]:
    """Limits of ``|beta_hat - beta*|^2 / |beta*|^2`` and ``|beta_hat - a* beta*|^2 / p``."""
    a, b = solution.a_star, solution.b_star
    if kappa == 0:
        raise ValueError("relative error is undefined for kappa = 0")
    return (a - 1.0) ** 2 + b * b / (kappa * kappa), b * b
