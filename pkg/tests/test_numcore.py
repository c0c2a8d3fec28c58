import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxht.numcore import (HalfspaceSet, NonFiniteObjectiveError, NotBracketedError,
                           RngStream, as_generator, chi_square_cdf, dykstra_project,
                           golden_section_extremum, nelder_mead_min, normal_cdf,
                           normal_sample, solve_scalar_root)


@pytest.mark.parametrize("x", [-37.0, -20.0, -8.5, -3.0, -1.0, -1e-3, 0.0, 0.5, 2.0, 6.0])
def test_normal_cdf_matches_mpmath(x):
    ref = float(mpmath.ncdf(x))
    assert normal_cdf(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("dof", [1, 2, 3, 5, 10, 50])
@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 3.84, 11.07, 80.0])
def test_chi_square_cdf_matches_mpmath(dof, x):
    ref = float(mpmath.gammainc(dof / 2, 0, x / 2, regularized=True))
    assert chi_square_cdf(x, dof) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_chi_square_cdf_rejects_bad_arguments():
    with pytest.raises(ValueError):
        chi_square_cdf(1.0, 0)
    with pytest.raises(ValueError):
        chi_square_cdf(-1.0, 2)
    assert chi_square_cdf(0.0, 3) == 0.0


def test_stream_replay_and_independence():
    a = normal_sample(RngStream(5, 3), 8)
    b = normal_sample(RngStream(5, 3), 8)
    c = normal_sample(RngStream(5, 4), 8)
    d = normal_sample(RngStream(5, 3).child(1), 8)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)
    # a stream's draws do not depend on what other streams did first
    normal_sample(RngStream(5, 0), 1000)
    np.testing.assert_array_equal(normal_sample(RngStream(5, 3), 8), a)


def test_stream_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)
    with pytest.raises(ValueError):
        RngStream(1, -2)
    with pytest.raises(TypeError):
        as_generator(7)


def test_root_and_bracketing():
    assert solve_scalar_root(lambda x: x * x - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert solve_scalar_root(lambda x: x, 0, 1) == 0.0
    with pytest.raises(NotBracketedError):
        solve_scalar_root(lambda x: x * x + 1, -1, 1)


def test_golden_section():
    x, v = golden_section_extremum(lambda t: -(t - 0.3) ** 2 + 2, -1, 4, tol=1e-10, sense="max")
    assert x == pytest.approx(0.3, abs=1e-6)
    assert v == pytest.approx(2.0)
    x, _ = golden_section_extremum(math.cosh, -2, 3, tol=1e-10)
    assert x == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        golden_section_extremum(math.cosh, 1, 1)


def test_nelder_mead_quadratic_and_nonfinite():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    x, f, ok = nelder_mead_min(lambda x: (x - 1) @ A @ (x - 1), [0.0, 0.0], tol=1e-10)
    assert ok
    np.testing.assert_allclose(x, [1, 1], atol=1e-7)
    with pytest.raises(NonFiniteObjectiveError):
        nelder_mead_min(lambda x: np.log(x[0]) if x[0] > 0 else np.nan, [-1.0])


def _active_set_projection(z, hs: HalfspaceSet):
    """Exhaustive active-set oracle: best feasible projection onto a face."""
    rows = hs.all_rows()
    best, best_d = None, np.inf
    k = rows.shape[0]
    for mask in range(1 << k):
        act = rows[[i for i in range(k) if mask >> i & 1]]
        if act.shape[0]:
            # projection onto the subspace {act @ m = 0}
            P = act.T @ np.linalg.pinv(act @ act.T) @ act
            m = z - P @ z
        else:
            m = z.copy()
        if hs.max_violation(m) <= 1e-10:
            d = np.sum((z - m) ** 2)
            if d < best_d - 1e-14:
                best, best_d = m, d
    return best


def test_dykstra_against_active_set():
    rng = np.random.default_rng(2)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, 4))
        rows = rng.normal(size=(k, n))
        hs = HalfspaceSet(rows=rows, dim=n)
        z = rng.normal(size=n) * 2
        res = dykstra_project(z, hs, tol=1e-12, max_iter=200_000)
        assert res.converged
        np.testing.assert_allclose(res.m, _active_set_projection(z, hs), atol=1e-6)


def test_halfspace_validation():
    with pytest.raises(ValueError):
        HalfspaceSet(rows=np.zeros((0, 0)))
    with pytest.raises(ValueError):
        HalfspaceSet(rows=np.ones((1, 2)), equalities=[(0, 5)])
    hs = HalfspaceSet(rows=np.zeros((0, 3)), equalities=[(0, 2)], dim=3)
    assert hs.all_rows().shape == (2, 3)
    assert hs.max_violation(np.array([1.0, 0.0, 0.5])) == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0.1, 10))
def test_dykstra_projection_is_positively_homogeneous(z, s):
    hs = HalfspaceSet(rows=np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]), dim=3)
    z = np.array(z)
    m1 = dykstra_project(z, hs, tol=1e-12).m
    m2 = dykstra_project(s * z, hs, tol=1e-12).m
    np.testing.assert_allclose(m2, s * m1, atol=1e-7 * (1 + s * np.linalg.norm(z)))
