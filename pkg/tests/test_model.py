import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxht.model import (ModelConfig, beta_scale, censor, gen_beta, generate_cohort,
                         null_coordinates, read_cohort_csv, reduce_to_1d, sort_cohort,
                         survival_times, write_cohort_csv)
from coxht.numcore import RngStream


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(n=0)
    with pytest.raises(ValueError):
        ModelConfig(kappa=-1)
    with pytest.raises(ValueError):
        ModelConfig(censor_lo=2, censor_hi=1)
    with pytest.raises(ValueError):
        ModelConfig(beta_scheme="dense")
    assert ModelConfig(n=200, p=50).delta == 0.25


@pytest.mark.parametrize("scheme", ["phase", "half_sparse"])
@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_beta_has_requested_signal_strength(scheme, kappa):
    cfg = ModelConfig(n=100, p=31, kappa=kappa, beta_scheme=scheme)
    beta = gen_beta(cfg, RngStream(1))
    assert np.linalg.norm(beta) / math.sqrt(cfg.p) == pytest.approx(kappa, rel=1e-12)
    nulls = null_coordinates(cfg)
    assert np.all(beta[nulls] == 0)
    if scheme == "half_sparse":
        assert nulls.tolist() == list(range(16, 31))


def test_beta_scale_matches_uniform_second_moment():
    # E[(c U)^2] with U ~ U[k-1, k+1] equals k^2 for the phase scheme
    for k in [0.3, 1.0, 3.0]:
        c = beta_scale(k, "phase")
        assert c * c * (k * k + 1 / 3) == pytest.approx(k * k)


def test_kappa_zero_makes_every_coordinate_null():
    cfg = ModelConfig(n=20, p=5, kappa=0.0)
    assert null_coordinates(cfg).tolist() == [0, 1, 2, 3, 4]
    assert np.all(gen_beta(cfg, RngStream(0)) == 0)


def test_survival_and_censoring():
    t = survival_times(np.zeros(3), np.exp(-np.array([1.0, 2.0, 3.0])), rate=2.0)
    np.testing.assert_allclose(t, [0.5, 1.0, 1.5])
    y, d = censor([1.0, 3.0, 2.0], [2.0, 2.0, 2.0])
    np.testing.assert_array_equal(y, [1, 2, 2])
    np.testing.assert_array_equal(d, [1, 0, 1])


def test_event_rate_matches_closed_form_at_kappa_zero():
    # P(T <= C) = 1 - (e^-1 - e^-2) for exponential(1) times and C ~ U[1, 2]
    cfg = ModelConfig(n=40000, p=1, kappa=0.0)
    c = generate_cohort(cfg, np.zeros(1), RngStream(3))
    expected = 1 - (math.exp(-1) - math.exp(-2))
    assert c.Delta.mean() == pytest.approx(expected, abs=4 * math.sqrt(0.18 / cfg.n))


def test_sort_cohort_structure():
    y = np.array([3.0, 1.0, 2.0, 2.0, 2.0, 5.0])
    d = np.array([1, 1, 0, 1, 1, 0])
    sc = sort_cohort(y, d)
    np.testing.assert_array_equal(sc.y, [5, 3, 2, 2, 2, 1])
    np.testing.assert_array_equal(sc.delta, [0, 1, 0, 1, 1, 1])
    np.testing.assert_array_equal(sc.order, [5, 0, 2, 3, 4, 1])
    np.testing.assert_array_equal(sc.rho, [0, 1, 4, 4, 4, 5])
    np.testing.assert_array_equal(sc.uncensored, [1, 3, 4, 5])
    np.testing.assert_array_equal(sc.next_uncensored, [1, 3, 3, 4, 5, -1])
    assert [g.tolist() for g in sc.tie_groups] == [[3, 4]]
    np.testing.assert_array_equal(sc.risk_set(3), [0, 1, 2, 3, 4])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), min_size=1, max_size=12))
def test_risk_sets_match_definition(obs):
    y = np.array([o[0] for o in obs], dtype=float)
    d = np.array([o[1] for o in obs])
    sc = sort_cohort(y, d)
    assert np.all(np.diff(sc.y) <= 0)
    for i in range(sc.n):
        at_risk = {j for j in range(sc.n) if sc.y[j] >= sc.y[i]}
        assert set(sc.risk_set(i).tolist()) == at_risk


def test_reduced_cohort_is_sorted_and_deterministic():
    cfg = ModelConfig(kappa=1.0)
    a = reduce_to_1d(cfg, 50, RngStream(4))
    b = reduce_to_1d(cfg, 50, RngStream(4))
    np.testing.assert_array_equal(a.q1, b.q1)
    assert np.all(np.diff(a.y) <= 0)
    assert a.sorted.n == 50


def test_cohort_csv_round_trip(tmp_path):
    cfg = ModelConfig(n=15, p=3)
    c = generate_cohort(cfg, gen_beta(cfg, RngStream(0)), RngStream(1))
    path = tmp_path / "c.csv"
    write_cohort_csv(c, path)
    assert path.read_text().splitlines()[0] == "id,Y,Delta,X1,X2,X3"
    back = read_cohort_csv(path)
    np.testing.assert_array_equal(back.X, c.X)
    np.testing.assert_array_equal(back.Y, c.Y)
    np.testing.assert_array_equal(back.Delta, c.Delta)


def test_cohort_csv_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_cohort_csv(bad)
    bad.write_text("id,Y,Delta,X1\n1,0.5,2,0.1\n")
    with pytest.raises(ValueError):
        read_cohort_csv(bad)
