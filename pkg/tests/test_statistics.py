import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

import holderprob as hp
from holderprob import DegenerateRatioWarning, DomainError, HolderRatioTransformer, RngStream
from holderprob.sampling import DistributionModel, PairSample

vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=20)


def test_equality_cases():
    e1 = np.eye(4)[0]
    for p in (1.5, 2.0, 3.0):
        assert hp.holder_ratio(e1, p, e1) == pytest.approx(1.0, abs=1e-15)
    assert hp.holder_ratio(np.ones(2), 2.0, np.ones(2)) == pytest.approx(1.0, abs=1e-15)


def test_dual_equality_case():
    # y_i = |x_i|^{p-1} attains equality for any p.
    p = 3.0
    x = np.array([0.3, 1.7, 2.2, 0.01])
    assert hp.holder_ratio(x, p, np.abs(x) ** (p - 1)) == pytest.approx(1.0, abs=1e-14)


def test_disjoint_supports_warn_and_return_zero():
    with pytest.warns(DegenerateRatioWarning):
        assert hp.holder_ratio(np.array([1.0, 0.0]), 2.0, np.array([0.0, 1.0])) == 0.0


def test_invalid_inputs():
    with pytest.raises(DomainError):
        hp.holder_ratio(np.zeros(3), 2.0, np.ones(3))
    with pytest.raises(DomainError):
        hp.holder_ratio(np.ones(3), 2.0, np.ones(4))
    with pytest.raises(DomainError):
        hp.holder_ratio(np.array([1.0, np.nan]), 2.0, np.ones(2))


def test_tiny_and_huge_scales():
    x = np.array([1e-200, 3e-200])
    y = np.array([2e200, 1e200])
    ref = hp.holder_ratio(np.array([1.0, 3.0]), 3.0, np.array([2.0, 1.0]))
    assert hp.holder_ratio(x, 3.0, y) == pytest.approx(ref, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(vectors, st.floats(1.05, 8.0), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.randoms())
def test_ratio_invariances(values, p, a, b, rnd):
    x = np.array(values)
    y = np.roll(x[::-1], 1) + 0.5
    if not x.any() or not np.abs(x * y).any():
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateRatioWarning)
        r = hp.holder_ratio(x, p, y)
        assert 0.0 <= r <= 1.0 + 1e-12
        assert hp.holder_ratio(a * x, p, -b * y) == pytest.approx(r, rel=1e-12, abs=1e-300)
        perm = list(range(x.size))
        rnd.shuffle(perm)
        assert hp.holder_ratio(x[perm], p, y[perm]) == pytest.approx(r, rel=1e-12, abs=1e-300)


def test_rows_match_scalar():
    batch = hp.sample_pairs(DistributionModel("cone"), 7, 3.0, RngStream(1), 50)
    rows = hp.holder_ratio_rows(batch.x, batch.y, 3.0)
    ref = [hp.holder_ratio(batch.x[i], 3.0, batch.y[i]) for i in range(50)]
    np.testing.assert_allclose(rows, ref, rtol=1e-13)


def test_pair_sample_input():
    s = PairSample(np.array([0.6, 0.8]), np.array([0.6, 0.8]))
    assert hp.holder_ratio(s, 2.0) == pytest.approx(1.0)


def test_decomposition_reconstructs_ratio():
    rng = RngStream(2).generator()
    pair = hp.conjugate(3.0)
    zeta = rng.standard_normal(200)
    eta = rng.standard_normal(200)
    d = hp.decompose(zeta, eta, pair)
    m = hp.limit_constants(pair).m
    lin = m + (d.s1 - m / pair.p * d.s2 - m / pair.q * d.s3) / math.sqrt(d.n)
    assert abs(lin + d.remainder - d.ratio) <= 1e-10
    assert d.ratio == pytest.approx(hp.holder_ratio(zeta, pair, eta), rel=1e-13)
    assert d.centered_scaled == pytest.approx(math.sqrt(200) * (d.ratio - m), rel=1e-12)


def test_decomposition_unit_powers():
    pair = hp.conjugate(3.0)
    signs = np.array([1, -1, 1, 1, -1, -1.0])
    d = hp.decompose(signs, -signs, pair)
    assert d.s2 == 0.0 and d.s3 == 0.0
    assert d.ratio == pytest.approx(1.0)


def test_remainder_is_second_order():
    pair = hp.conjugate(3.0)
    means = []
    ns = (100, 400, 1600, 6400)
    for n in ns:
        raw = hp.sample_pgg(pair, "p", RngStream(3, n), size=(400, n))
        raw_y = hp.sample_pgg(pair, "q", RngStream(4, n), size=(400, n))
        from holderprob.statistics import decompose_rows
        means.append(np.mean(np.abs(decompose_rows(raw, raw_y, pair)["remainder"])))
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.15)


def test_reverse_indicator():
    batch = hp.sample_pairs(DistributionModel("cone"), 25, 2.0, RngStream(5), 1)
    s = batch[0]
    assert hp.reverse_holder_indicator(s, 2.0, -1e10)
    # t/sqrt(n) + m > 1 is never reached.
    assert not hp.reverse_holder_indicator(s, 2.0, 5 * (1 - 2 / math.pi) + 1e-9)


def test_transformer_outputs():
    batch = hp.sample_pairs(DistributionModel("cone"), 10, 3.0, RngStream(6), 30)
    X = np.hstack([batch.x, batch.y])
    tr = HolderRatioTransformer(p=3.0).fit(X)
    assert tr.n_features_in_ == 20 and tr.dimension_ == 10
    np.testing.assert_allclose(tr.transform(X)[:, 0], hp.holder_ratio_rows(batch.x, batch.y, 3.0))
    cen = HolderRatioTransformer(p=3.0, output="centered").fit_transform(X)
    m = hp.limit_constants(3.0).m
    np.testing.assert_allclose(cen[:, 0], math.sqrt(10) * (tr.transform(X)[:, 0] - m))
    dec = HolderRatioTransformer(p=3.0, output="decomposition").fit_transform(X)
    assert dec.shape == (30, 6)
    assert list(HolderRatioTransformer(output="decomposition").fit(X).get_feature_names_out()) \
        == ["ratio", "centered_scaled", "s1", "s2", "s3", "remainder"]


def test_transformer_params_and_errors():
    tr = HolderRatioTransformer(p=1.5, output="centered")
    assert tr.get_params() == {"p": 1.5, "output": "centered"}
    assert clone(tr).get_params() == tr.get_params()
    X = np.ones((3, 4))
    with pytest.raises(ValueError):
        HolderRatioTransformer(output="bogus").fit(X)
    with pytest.raises(ValueError):
        HolderRatioTransformer().fit(np.ones((3, 5)))
    with pytest.raises(ValueError):
        HolderRatioTransformer().fit(X).transform(np.ones((3, 6)))
