"""Exact (optionally weighted) empirical CDFs and Kolmogorov distances."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError

__all__ = [
    "EmpiricalDistribution",
    "normal_cdf",
    "kolmogorov_distance",
    "two_sample_ks",
    "dkw_bound",
    "two_sample_dkw_bound",
    "GaussianKolmogorovFit",
]


class EmpiricalDistribution:
    """ECDF with ties merged into single jumps.

    ``values`` holds the distinct sample points in ascending order and
    ``cdf[i]`` is ``F(values[i])``; ``cdf_before[i]`` is the left limit.
    """

    def __init__(self, values, weights=None):
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("empirical distribution needs at least one value")
        if np.isnan(x).any():
            raise DomainError("values contain NaN")
        if weights is not None:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != x.shape:
                raise DomainError(f"{w.size} weights for {x.size} values")
            if not np.all(w > 0) or not np.all(np.isfinite(w)):
                raise DomainError("weights must be positive and finite")
            if np.all(w == w[0]):
                weights = None
        order = np.argsort(x, kind="stable")
        xs = x[order]
        keep = np.empty(xs.size, dtype=bool)
        keep[-1] = True
        np.not_equal(xs[1:], xs[:-1], out=keep[:-1])
        ends = np.flatnonzero(keep)
        self.values = xs[ends]
        self.size = x.size
        if weights is None:
            self.cdf = (ends + 1) / x.size
            self.weights = None
            self.effective_size = float(x.size)
        else:
            ws = w[order]
            cum = np.cumsum(ws)
            self.cdf = cum[ends] / cum[-1]
            self.cdf[-1] = 1.0
            self.weights = ws / cum[-1]
            self.effective_size = float(cum[-1] ** 2 / np.sum(ws * ws))
        self.cdf_before = np.concatenate(([0.0], self.cdf[:-1]))

    @property
    def sorted_values(self) -> np.ndarray:
        return self.values

    def __call__(self, t) -> np.ndarray:
        """Right-continuous ECDF evaluated at `t`."""
        idx = np.searchsorted(self.values, np.asarray(t, dtype=float), side="right")
        return np.where(idx > 0, self.cdf[np.maximum(idx - 1, 0)], 0.0)

    def mean(self) -> float:
        masses = np.diff(np.concatenate(([0.0], self.cdf)))
        return float(np.dot(masses, self.values))


def normal_cdf(t, sigma2: float):
    """CDF of ``N(0, sigma2)`` at `t` (via ``scipy.special.ndtr``)."""
    sigma2 = float(sigma2)
    if not sigma2 > 0.0 or not math.isfinite(sigma2):
        raise DomainError(f"variance must be positive and finite, got {sigma2}")
    out = ndtr(np.asarray(t, dtype=float) / math.sqrt(sigma2))
    return float(out) if np.ndim(out) == 0 else out


def _as_empirical(emp) -> EmpiricalDistribution:
    return emp if isinstance(emp, EmpiricalDistribution) else EmpiricalDistribution(emp)


def kolmogorov_distance(emp, sigma2: float, mean: float = 0.0) -> float:
    """``sup_t |F_n(t) - Phi((t - mean)/sigma)|``, evaluated exactly at the jumps.

    The supremum against a continuous CDF is attained at a jump point, on one
    side or the other, so checking both one-sided limits there is exact.
    """
    emp = _as_empirical(emp)
    phi = normal_cdf(emp.values - mean, sigma2)
    phi = np.atleast_1d(phi)
    return float(max(np.max(np.abs(emp.cdf - phi)), np.max(np.abs(emp.cdf_before - phi))))


def two_sample_ks(a, b) -> float:
    """Sup-norm distance between two (weighted) ECDFs.

    Both step functions are constant between consecutive points of the merged
    support, so comparing them on that support is exact.
    """
    a, b = _as_empirical(a), _as_empirical(b)
    grid = np.union1d(a.values, b.values)
    return float(np.max(np.abs(a(grid) - b(grid))))


def dkw_bound(size: float, alpha: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz radius: ``P(D > eps) <= alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * size))


def two_sample_dkw_bound(size_a: float, size_b: float, alpha: float = 0.01) -> float:
    return math.sqrt(math.log(2.0 / alpha) * (size_a + size_b) / (2.0 * size_a * size_b))


class GaussianKolmogorovFit(BaseEstimator):
    """Compare a (weighted) sample with ``N(0, sigma2)``.

    ``fit`` stores the sample mean, variance and Kolmogorov distance;
    ``score`` returns the negated distance so larger is better, as sklearn
    model selection expects.
    """

    def __init__(self, sigma2: float = 1.0):
        self.sigma2 = sigma2

    def fit(self, X, y=None, sample_weight=None):
        x = np.asarray(X, dtype=float).ravel()
        emp = EmpiricalDistribution(x, sample_weight)
        w = np.full(x.size, 1.0 / x.size) if sample_weight is None else (
            np.asarray(sample_weight, dtype=float) / np.sum(sample_weight))
        self.mean_ = float(np.dot(w, x))
        self.variance_ = float(np.dot(w, (x - self.mean_) ** 2))
        self.kolmogorov_distance_ = kolmogorov_distance(emp, self.sigma2)
        self.effective_size_ = emp.effective_size
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "kolmogorov_distance_")
        if X is not None:
            return -kolmogorov_distance(np.asarray(X, dtype=float).ravel(), self.sigma2)
        return -self.kolmogorov_distance_
