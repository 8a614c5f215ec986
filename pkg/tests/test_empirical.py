import math

import numpy as np
import pytest
from scipy import stats

from holderprob import (DomainError, EmpiricalDistribution, GaussianKolmogorovFit, RngStream,
                        dkw_bound, kolmogorov_distance, normal_cdf, two_sample_dkw_bound,
                        two_sample_ks)


def test_normal_cdf_examples():
    assert normal_cdf(0.0, 3.7) == 0.5
    s2 = 0.3
    assert normal_cdf(math.sqrt(s2), s2) == pytest.approx(0.8413447461, abs=1e-10)
    assert normal_cdf(-1.3, 2.0) + normal_cdf(1.3, 2.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        normal_cdf(0.0, 0.0)
    with pytest.raises(DomainError):
        normal_cdf(0.0, -1.0)


def test_kolmogorov_examples():
    assert kolmogorov_distance([0.0], 1.0) == 0.5
    x = RngStream(1).generator().standard_normal(10 ** 5)
    assert kolmogorov_distance(x, 1.0) <= 0.006
    assert dkw_bound(10 ** 5) == pytest.approx(math.sqrt(math.log(200) / 2e5))


def test_kolmogorov_matches_scipy():
    x = RngStream(2).generator().standard_normal(500) * 1.3
    ref = stats.kstest(x, stats.norm(scale=math.sqrt(1.5)).cdf).statistic
    assert kolmogorov_distance(x, 1.5) == pytest.approx(ref, abs=1e-14)


def test_kolmogorov_exact_against_dense_grid():
    x = RngStream(3).generator().standard_normal(40)
    exact = kolmogorov_distance(x, 1.0)
    emp = EmpiricalDistribution(x)
    # Evaluate just left and right of each jump and on a fine grid in between.
    grid = np.concatenate([np.linspace(-6, 6, 200001), x - 1e-12, x])
    dense = np.max(np.abs(emp(grid) - normal_cdf(grid, 1.0)))
    assert dense <= exact + 1e-12
    assert dense == pytest.approx(exact, abs=1e-9)


def test_two_sample_examples():
    a = RngStream(4).generator().random(300)
    assert two_sample_ks(a, a) == 0.0
    assert two_sample_ks([0.0], [1.0]) == 1.0
    b = RngStream(5).generator().random(200)
    ref = stats.ks_2samp(a, b).statistic
    assert two_sample_ks(a, b) == pytest.approx(ref, abs=1e-14)


def test_permutation_invariance():
    x = RngStream(6).generator().standard_normal(100)
    perm = RngStream(7).generator().permutation(100)
    assert kolmogorov_distance(x, 1.0) == kolmogorov_distance(x[perm], 1.0)


def test_ties_merge():
    emp = EmpiricalDistribution([1.0, 1.0, 2.0, 0.0])
    np.testing.assert_array_equal(emp.values, [0.0, 1.0, 2.0])
    np.testing.assert_allclose(emp.cdf, [0.25, 0.75, 1.0])
    np.testing.assert_allclose(emp.cdf_before, [0.0, 0.25, 0.75])
    assert emp(0.99) == 0.25 and emp(1.0) == 0.75 and emp(-1) == 0.0
    assert emp.mean() == pytest.approx(1.0)


def test_equal_weights_identity():
    x = RngStream(8).generator().standard_normal(50)
    plain = EmpiricalDistribution(x)
    weighted = EmpiricalDistribution(x, np.full(50, 3.3))
    np.testing.assert_array_equal(plain.cdf, weighted.cdf)
    assert weighted.effective_size == 50.0


def test_weighted_distribution():
    emp = EmpiricalDistribution([0.0, 1.0], [1.0, 3.0])
    np.testing.assert_allclose(emp.cdf, [0.25, 1.0])
    assert emp.effective_size == pytest.approx(16 / 10)
    with pytest.raises(DomainError):
        EmpiricalDistribution([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(DomainError):
        EmpiricalDistribution([])
    with pytest.raises(DomainError):
        EmpiricalDistribution([0.0, np.nan])


def test_two_sample_bound():
    assert two_sample_dkw_bound(100, 100) == pytest.approx(dkw_bound(50))


def test_gaussian_fit_estimator():
    x = RngStream(9).generator().standard_normal(2000)
    est = GaussianKolmogorovFit(sigma2=1.0).fit(x)
    assert est.mean_ == pytest.approx(x.mean())
    assert est.variance_ == pytest.approx(x.var())
    assert est.score() == -est.kolmogorov_distance_
    assert est.effective_size_ == 2000
    assert est.get_params() == {"sigma2": 1.0}
    w = np.ones(2000)
    w[:1000] = 2.0
    assert GaussianKolmogorovFit().fit(x, sample_weight=w).effective_size_ < 2000
