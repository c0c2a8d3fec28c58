import numpy as np
import pytest
from scipy.optimize import linprog

from coxht.simplex import LPInfeasible, LPUnbounded, simplex_max, simplex_max_eq


def _highs(c, A, b):
    res = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * len(c), method="highs")
    return res


@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_random_bounded_lps_match_highs(rule):
    rng = np.random.default_rng(0)
    for _ in range(60):
        m, n = rng.integers(2, 8), rng.integers(2, 8)
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m) + 0.5
        # a box keeps every instance bounded
        A = np.vstack([A, np.eye(n)])
        b = np.concatenate([b, np.full(n, 3.0)])
        c = rng.normal(size=n)
        ref = _highs(c, A, b)
        if ref.status == 2:
            with pytest.raises(LPInfeasible):
                simplex_max(c, A, b, rule=rule)
            continue
        res = simplex_max(c, A, b, rule=rule)
        assert res.value == pytest.approx(-ref.fun, abs=1e-8)
        assert np.all(A @ res.x <= b + 1e-8) and np.all(res.x >= -1e-12)


def test_unbounded_and_infeasible():
    with pytest.raises(LPUnbounded):
        simplex_max(np.array([1.0, 0.0]), np.array([[-1.0, 1.0]]), np.array([1.0]))
    with pytest.raises(LPInfeasible):
        simplex_max(np.array([1.0]), np.array([[1.0], [-1.0]]), np.array([1.0, -2.0]))


def test_degenerate_lp_terminates():
    # Beale's cycling example; Bland's rule and the Dantzig fallback must finish
    c = np.array([0.75, -150.0, 0.02, -6.0])
    A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b = np.array([0.0, 0.0, 1.0])
    for rule in ("bland", "dantzig"):
        assert simplex_max(c, A, b, rule=rule).value == pytest.approx(0.05)


def test_equality_form_from_slack_basis():
    rng = np.random.default_rng(3)
    for _ in range(30):
        m, k = 3, 4
        B = rng.normal(size=(m, k))
        A = np.hstack([B, np.eye(m)])
        b = rng.uniform(0.5, 2, size=m)
        c = np.concatenate([rng.normal(size=k), -np.ones(m)])
        ref = linprog(-c, A_eq=A, b_eq=b, bounds=[(0, 10)] * k + [(0, None)] * m,
                      method="highs")
        # bound the structural columns through extra slack rows
        A2 = np.block([[A, np.zeros((m, k))], [np.eye(k), np.zeros((k, m)), np.eye(k)]])
        b2 = np.concatenate([b, np.full(k, 10.0)])
        c2 = np.concatenate([c, np.zeros(k)])
        basis = np.concatenate([k + np.arange(m), k + m + np.arange(k)])
        res = simplex_max_eq(c2, A2, b2, basis, rule="dantzig")
        assert res.value == pytest.approx(-ref.fun, abs=1e-8)


def test_equality_form_validates_basis():
    A = np.array([[1.0, 2.0]])
    with pytest.raises(ValueError):
        simplex_max_eq(np.zeros(2), A, np.array([1.0]), [1])
    with pytest.raises(ValueError):
        simplex_max_eq(np.zeros(2), A, np.array([-1.0]), [0])
