import numpy as np
import pytest
from scipy import stats

from vbsvm.data import LabeledDataset
from vbsvm.distributions import make_rng
from vbsvm.errors import DataError
from vbsvm.evaluate import ber
from vbsvm.simulate import SimSpec, apply_mcar, bayes_rule, draw_logistic_data, simulate_logistic


def test_spec_validation():
    for bad in [dict(n=0, d=2), dict(n=5, d=0), dict(n=5, d=2, missing_fraction=1.0), dict(n=5, d=2, missing_fraction=-0.1)]:
        with pytest.raises(ValueError):
            SimSpec(**bad)


def test_labels_and_shapes():
    ds, beta, u = simulate_logistic(SimSpec(100, 10, 1))
    assert ds.D.shape == (100, 10) and u.shape == (10,)
    assert set(np.unique(ds.y)) <= {-1.0, 1.0}
    assert np.isfinite(beta)
    assert not ds.has_missing


def test_seeded_determinism():
    a = simulate_logistic(SimSpec(50, 3, 4, 0.2))
    b = simulate_logistic(SimSpec(50, 3, 4, 0.2))
    np.testing.assert_array_equal(a[0].y, b[0].y)
    np.testing.assert_array_equal(a[0].observed_mask(), b[0].observed_mask())
    np.testing.assert_array_equal(np.nan_to_num(a[0].D), np.nan_to_num(b[0].D))
    c = simulate_logistic(SimSpec(50, 3, 5))
    assert not np.array_equal(a[2], c[2])


def test_generator_marginals():
    ds, _, _ = simulate_logistic(SimSpec(5000, 4, 2))
    D = ds.D
    n = D.shape[0]
    assert np.all(np.abs(D.mean(axis=0)) < 4 / np.sqrt(n))
    # var of the sample variance of N(0,1) is 2/(n-1)
    assert np.all(np.abs(D.var(axis=0, ddof=1) - 1) < 4 * np.sqrt(2 / (n - 1)))
    off = np.corrcoef(D.T)[np.triu_indices(4, 1)]
    assert np.all(np.abs(off) < 4 / np.sqrt(n))


def test_class_balance_over_seeds():
    means = np.array([simulate_logistic(SimSpec(200, 3, s))[0].y.mean() for s in range(200)])
    se = means.std(ddof=1) / np.sqrt(means.size)
    assert abs(means.mean()) < 4 * se


def test_label_frequency_follows_logistic_link():
    rng = make_rng(0)
    beta, u = 0.3, np.array([1.0, -0.5])
    ds = draw_logistic_data(beta, u, 40000, rng)
    p = 1 / (1 + np.exp(-(beta + ds.D @ u)))
    # E[q] = E[p]; compare with the realised rate
    q = (ds.y + 1) / 2
    assert abs(q.mean() - p.mean()) < 4 * np.sqrt(np.mean(p * (1 - p)) / q.size)


def test_bayes_rule_tie_and_rate():
    assert bayes_rule(0.0, np.zeros(2), np.zeros((1, 2))).tolist() == [1]
    ds, beta, u = simulate_logistic(SimSpec(100, 5, 3))
    fresh = draw_logistic_data(beta, u, 100000, make_rng(99))
    rate = ber(fresh.y, bayes_rule(beta, u, fresh.D))
    assert rate < 0.5
    # a rule with the wrong direction does worse
    assert ber(fresh.y, bayes_rule(beta, -u, fresh.D)) > rate


def test_mcar_zero_fraction_is_identity():
    ds, _, _ = simulate_logistic(SimSpec(20, 3, 0))
    out = apply_mcar(ds, 0.0, make_rng(1))
    assert np.all(out.observed_mask() == 1)


def test_mcar_count_within_binomial_noise():
    ds, _, _ = simulate_logistic(SimSpec(2500, 4, 0))
    out = apply_mcar(ds, 0.2, make_rng(1))
    miss = int((out.observed_mask() == 0).sum())
    se = np.sqrt(10000 * 0.2 * 0.8)
    assert abs(miss - 2000) < 4 * se
    assert np.all(np.isnan(out.D[out.observed_mask() == 0]))
    np.testing.assert_array_equal(out.y, ds.y)


def test_mcar_independent_of_labels():
    r = []
    for s in range(30):
        ds, _, _ = simulate_logistic(SimSpec(300, 5, s))
        out = apply_mcar(ds, 0.3, make_rng(1000 + s))
        r.append(stats.pointbiserialr(out.y, (out.observed_mask() == 0).sum(axis=1)).statistic)
    r = np.array(r)
    assert abs(r.mean()) < 4 * r.std(ddof=1) / np.sqrt(r.size)


def test_mcar_restricted_columns_and_existing_missing_kept():
    ds, _, _ = simulate_logistic(SimSpec(200, 3, 0))
    once = apply_mcar(ds, 0.3, make_rng(1), columns=[1])
    m = once.observed_mask()
    assert m[:, [0, 2]].all() and not m[:, 1].all()
    twice = apply_mcar(once, 0.3, make_rng(2), columns=[2])
    assert np.all(twice.observed_mask()[:, 1] == m[:, 1])


def test_mcar_emptied_column_errors():
    ds = LabeledDataset(np.array([1.0, -1.0]), np.array([[1.0], [2.0]]))
    with pytest.raises(DataError):
        apply_mcar(ds, 0.999999, make_rng(0), max_tries=3)
    with pytest.raises(ValueError):
        apply_mcar(ds, 1.0, make_rng(0))
