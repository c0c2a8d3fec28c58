"""Monte Carlo evaluation of the existence boundary.

For a one-dimensional reduced cohort ``(y_i, q_i, Delta_i)`` sorted by
decreasing time and an independent ``h ~ N(0, I_n)``, the boundary at
``(kappa, censoring)`` is the limit of

    (1/n) min_{t, m in M} |h - t q - m|^2,

where ``M`` requires every event's coordinate to be no larger than all
coordinates before it and tied events to share a value. ``M`` is cut out
by the pairwise rows ``m_i >= m_{k_i}`` with ``k_i`` the first event after
``i``, so its constraint graph is a forest (``k_i`` is the parent of ``i``)
and the projection onto ``M`` is a tree-ordered isotonic regression.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import ModelConfig, ReducedCohort, SortedCohort, reduce_to_1d
from .numcore import HalfspaceSet, RngStream, as_generator, dykstra_project
from .parallel import parallel_map


class ProjectionError(RuntimeError):
    """The iterative cone projection did not converge."""


@dataclass
class ConeM:
    """``{m : m[i] >= m[parent[i]] for i in halfspaces, m[a] == m[b] for (a, b) in equalities}``.

    ``parent[i]`` is the first event position after ``i`` (``-1`` if none);
    ``halfspaces`` lists the ``i`` with ``parent[i] >= 0``.
    """

    n: int
    parent: np.ndarray
    equalities: list[tuple[int, int]]

    @property
    def halfspaces(self) -> np.ndarray:
        return np.flatnonzero(self.parent >= 0)

    def as_halfspaces(self) -> HalfspaceSet:
        idx = self.halfspaces
        rows = np.zeros((idx.size, self.n))
        rows[np.arange(idx.size), idx] = 1.0
        rows[np.arange(idx.size), self.parent[idx]] = -1.0
        return HalfspaceSet(rows=rows, equalities=self.equalities, dim=self.n)

    def max_violation(self, m) -> float:
        m = np.asarray(m, dtype=float)
        idx = self.halfspaces
        v = 0.0
        if idx.size:
            v = max(v, float(np.max(m[self.parent[idx]] - m[idx])))
        for a, b in self.equalities:
            v = max(v, abs(float(m[a] - m[b])))
        return max(v, 0.0)


def build_cone(reduced) -> ConeM:
    """Cone description for a sorted cohort (``ReducedCohort`` or ``SortedCohort``).

    Only events at positions ``>= 1`` generate constraints: the largest
    observation has nothing before it.
    """
    sc = reduced.sorted if isinstance(reduced, ReducedCohort) else reduced
    if not isinstance(sc, SortedCohort):
        raise TypeError("expected a ReducedCohort or SortedCohort")
    parent = sc.next_uncensored.copy()
    eqs = [(int(a), int(b)) for grp in sc.tie_groups for a, b in zip(grp[:-1], grp[1:])]
    return ConeM(n=sc.n, parent=parent, equalities=eqs)


# ---------------------------------------------------------------------------
# projection onto M
# ---------------------------------------------------------------------------

def _find(uf, i):
    root = i
    while uf[root] != root:
        root = uf[root]
    while uf[i] != root:
        uf[i], i = root, uf[i]
    return root


def project_tree(z, cone: ConeM) -> np.ndarray:
    """Exact Euclidean projection of ``z`` onto ``M``.

    Blocks start as single coordinates (tied events pre-merged). The block
    with the smallest mean among those still attached to a parent is taken
    from a heap: if its parent block is itself attached, or is a root with a
    larger mean, the two are pooled; otherwise the block is detached and
    becomes a root. Every pooling step is forced by the ordering of means,
    so the final block means are the projection.
    """
    z = np.asarray(z, dtype=float)
    n = cone.n
    if z.shape != (n,):
        raise ValueError(f"z has shape {z.shape}, expected ({n},)")
    uf = list(range(n))
    total = z.astype(float).tolist()
    size = [1] * n
    top = list(range(n))             # member closest to the root (largest index)
    attached = [bool(cone.parent[i] >= 0) for i in range(n)]
    version = [0] * n

    def union(a, b):
        # pool block b into block a; both are representatives
        uf[b] = a
        total[a] += total[b]
        size[a] += size[b]
        top[a] = max(top[a], top[b])
        version[a] += 1

    for a, b in cone.equalities:
        ra, rb = _find(uf, a), _find(uf, b)
        if ra != rb:
            union(ra, rb)
    for i in range(n):
        r = _find(uf, i)
        if r == i:
            attached[r] = bool(cone.parent[top[r]] >= 0)

    heap = [(total[r] / size[r], r, version[r]) for r in range(n)
            if _find(uf, r) == r and attached[r]]
    heapq.heapify(heap)
    while heap:
        mean, b, ver = heapq.heappop(heap)
        if _find(uf, b) != b or version[b] != ver or not attached[b]:
            continue
        a = _find(uf, int(cone.parent[top[b]]))
        if attached[a] or total[a] / size[a] > mean:
            union(a, b)
            if attached[a]:
                heapq.heappush(heap, (total[a] / size[a], a, version[a]))
        else:
            attached[b] = False

    out = np.empty(n)
    for i in range(n):
        r = _find(uf, i)
        out[i] = total[r] / size[r]
    return out


def project_cone(z, cone: ConeM, method: str = "tree", tol: float = 1e-10) -> np.ndarray:
    if method == "tree":
        return project_tree(z, cone)
    if method == "dykstra":
        res = dykstra_project(z, cone.as_halfspaces(), tol=tol, max_iter=200_000)
        if not res.converged:
            raise ProjectionError(f"Dykstra did not converge in {res.iterations} sweeps")
        return res.m
    raise ValueError("method must be 'tree' or 'dykstra'")


# ---------------------------------------------------------------------------
# the QP
# ---------------------------------------------------------------------------

@dataclass
class QPSolution:
    value: float
    t: float
    m: np.ndarray
    iterations: int


def _residual_sq(h, q, t, cone, method):
    r = h - t * q
    m = project_cone(r, cone, method)
    return float(np.sum((r - m) ** 2)), m


def solve_qp(reduced, h, tol: float = 1e-9, method: str = "alternating",
             projector: str = "tree", max_sweeps: int = 10_000) -> QPSolution:
    """Minimize ``|h - t q - m|^2`` over ``t`` and ``m in M``.

    ``method="alternating"`` alternates the exact ``t`` update
    ``<h - m, q> / |q|^2`` with the exact projection onto ``M`` until the
    relative decrease is at most ``tol``. ``method="profile"`` minimizes the
    convex profile ``t -> dist(h - t q, M)^2`` with Brent's method instead.
    ``value`` is the minimum divided by ``n``.
    """
    h = np.asarray(h, dtype=float)
    q = np.asarray(reduced.q1, dtype=float)
    n = q.shape[0]
    if h.shape != (n,):
        raise ValueError(f"h must have length {n}")
    cone = build_cone(reduced)
    qq = float(q @ q)
    if qq == 0.0:
        m = project_cone(h, cone, projector)
        return QPSolution(float(np.sum((h - m) ** 2)) / n, 0.0, m, 1)

    if method == "alternating":
        m = project_cone(h, cone, projector)
        t = float((h - m) @ q) / qq
        obj = float(np.sum((h - t * q - m) ** 2))
        it = 0
        for it in range(1, max_sweeps + 1):
            m = project_cone(h - t * q, cone, projector)
            t = float((h - m) @ q) / qq
            new = float(np.sum((h - t * q - m) ** 2))
            done = obj - new <= tol * max(obj, 1e-300)
            obj = new
            if done:
                break
        return QPSolution(obj / n, t, m, it)

    if method == "profile":
        def g(t):
            return _residual_sq(h, q, t, cone, projector)[0]
        t0 = float(h @ q) / qq
        scale = math.sqrt(float(h @ h) / qq) + 1.0
        res = optimize.minimize_scalar(g, bracket=(t0 - scale, t0 + scale),
                                       method="brent", options=dict(xtol=1e-10))
        obj, m = _residual_sq(h, q, float(res.x), cone, projector)
        return QPSolution(obj / n, float(res.x), m, int(res.nfev))

    raise ValueError("method must be 'alternating' or 'profile'")


def qp_value(reduced, h, tol: float = 1e-9, method: str = "alternating",
             projector: str = "tree") -> float:
    """``(1/n) min_{t, m in M} |h - t q - m|^2``."""
    return solve_qp(reduced, h, tol=tol, method=method, projector=projector).value


def estimate_h(config: ModelConfig, n: int, reps: int, stream: RngStream,
               method: str = "alternating") -> tuple[float, float]:
    """Monte Carlo mean and standard error of :func:`qp_value`.

    Replication ``r`` uses sub-stream ``stream.child(r)``: its first child
    draws the reduced cohort, its second the independent ``h``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    vals = np.array([_one_rep(config, n, stream.child(r), method) for r in range(reps)])
    return summarize(vals)


def _one_rep(config, n, stream, method="alternating") -> float:
    red = reduce_to_1d(config, n, stream.child(0))
    h = as_generator(stream.child(1)).standard_normal(n)
    return qp_value(red, h, method=method)


def summarize(vals) -> tuple[float, float]:
    vals = np.asarray(vals, dtype=float)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
    return mean, se


@dataclass
class BoundaryPoint:
    kappa: float
    delta_hat: float
    stderr: float
    n: int
    reps: int


def _rep_task(args):
    config_dict, n, stream, method = args
    return _one_rep(ModelConfig(**config_dict), n, stream, method)


def boundary_curve(config: ModelConfig, kappa_grid, n: int, reps: int,
                   stream: RngStream, method: str = "alternating",
                   workers: int = 1) -> list[BoundaryPoint]:
    """``estimate_h`` at each kappa; point ``k`` uses ``stream.child(k)``.

    Replications may be spread over ``workers`` processes; the values are
    identical to the serial computation.
    """
    grid = [float(k) for k in kappa_grid]
    if not grid:
        raise ValueError("kappa grid is empty")
    if any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ValueError("kappa grid must be strictly increasing")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    tasks = []
    for k, kappa in enumerate(grid):
        cfg = {**config.to_dict(), "kappa": kappa}
        tasks += [(cfg, n, stream.child(k).child(r), method) for r in range(reps)]
    vals = np.asarray(parallel_map(_rep_task, tasks, workers)).reshape(len(grid), reps)
    out = []
    for k, kappa in enumerate(grid):
        mean, se = summarize(vals[k])
        out.append(BoundaryPoint(kappa, mean, se, n, reps))
    return out
