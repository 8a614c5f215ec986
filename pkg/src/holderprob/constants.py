"""Conjugate exponents and the closed-form limit constants of the Hölder ratio.

Every Gamma-function ratio is evaluated as ``exp(lgamma(a) - lgamma(b))`` so
that small exponents (large ``1/p`` arguments) never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import gammaln

from ._validation import check_exponent
from .exceptions import DomainError

__all__ = [
    "ConjugatePair",
    "LimitConstants",
    "conjugate",
    "gamma_moment",
    "limit_constants",
    "covariance_gamma_form",
    "covariance_moment_form",
]


@dataclass(frozen=True)
class ConjugatePair:
    """Hölder exponents ``p, q > 1`` with ``1/p + 1/q = 1``.

    Build instances through :func:`conjugate`; ``q`` is always derived.
    """

    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 1.0 and self.q > 1.0):
            raise DomainError(f"both exponents must exceed 1, got {self.p}, {self.q}")
        if abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-12:
            raise DomainError(f"{self.p} and {self.q} are not conjugate")

    def exponent(self, choice: str) -> float:
        """Return ``p`` or ``q`` for ``choice`` in ``{"p", "q"}``."""
        choice = str(choice).lower()
        if choice == "p":
            return self.p
        if choice == "q":
            return self.q
        raise DomainError(f"exponent choice must be 'p' or 'q', got {choice!r}")

    def swap(self) -> "ConjugatePair":
        return ConjugatePair(self.q, self.p)


def conjugate(p) -> ConjugatePair:
    p = check_exponent(p)
    q = p / (p - 1.0)
    return ConjugatePair(p, q)


ExponentLike = Union[float, ConjugatePair]


def _as_exponent(p: ExponentLike) -> float:
    if isinstance(p, ConjugatePair):
        return p.p
    return check_exponent(p, either_side=True)


def _log_moment(p: float, k: float) -> float:
    return (k / p) * math.log(p) + gammaln((k + 1.0) / p) - gammaln(1.0 / p)


def gamma_moment(p: ExponentLike, k: float) -> float:
    """Absolute moment ``E|zeta|^k`` of the p-generalized Gaussian.

    ``E|zeta|^k = p^{k/p} Gamma((k + 1)/p) / Gamma(1/p)``. Passing a
    :class:`ConjugatePair` uses its ``p``; pass ``pair.q`` for the other side.
    """
    p = _as_exponent(p)
    k = float(k)
    if not k >= 0.0 or not math.isfinite(k):
        raise DomainError(f"moment order must be finite and >= 0, got {k}")
    return math.exp(_log_moment(p, k))


def _gamma_ratio_term(p: float, j: int) -> float:
    # p^{(j-1)/p} Gamma(j/p) / Gamma(1/p)
    return math.exp(((j - 1) / p) * math.log(p) + gammaln(j / p) - gammaln(1.0 / p))


def _mean_product(pair: ConjugatePair) -> float:
    return _gamma_ratio_term(pair.p, 2) * _gamma_ratio_term(pair.q, 2)


def covariance_gamma_form(pair: ConjugatePair) -> np.ndarray:
    """Covariance of ``(|zeta eta|, |zeta|^p, |eta|^q)`` from its Gamma closed form."""
    p, q = pair.p, pair.q
    m = _mean_product(pair)
    c00 = _gamma_ratio_term(p, 3) * _gamma_ratio_term(q, 3) - m * m
    return np.array([[c00, m, m], [m, p, 0.0], [m, 0.0, q]])


def covariance_moment_form(pair: ConjugatePair) -> np.ndarray:
    """The same covariance assembled from raw absolute moments.

    Independent code path used to cross-check :func:`covariance_gamma_form`.
    """
    p, q = pair.p, pair.q
    e1p, e1q = gamma_moment(p, 1), gamma_moment(q, 1)
    m = e1p * e1q
    c00 = gamma_moment(p, 2) * gamma_moment(q, 2) - m * m
    # E[|zeta eta| |zeta|^p] = E|zeta|^{p+1} E|eta|, and E|zeta|^p = 1.
    c01 = gamma_moment(p, p + 1) * e1q - m
    c02 = e1p * gamma_moment(q, q + 1) - m
    c11 = gamma_moment(p, 2 * p) - 1.0
    c22 = gamma_moment(q, 2 * q) - 1.0
    return np.array([[c00, c01, c02], [c01, c11, 0.0], [c02, 0.0, c22]])


@dataclass(frozen=True, eq=False)
class LimitConstants:
    """Limit mean, covariance, gradient vector and CLT variance for one pair."""

    pair: ConjugatePair
    m: float
    cov: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    sigma2: float
    c_norm: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def to_dict(self) -> dict:
        return {
            "p": self.pair.p,
            "q": self.pair.q,
            "m": self.m,
            "sigma2": self.sigma2,
            "c_norm": self.c_norm,
            "cov": self.cov.tolist(),
            "d": self.d.tolist(),
        }


def limit_constants(pair: ConjugatePair) -> LimitConstants:
    if not isinstance(pair, ConjugatePair):
        pair = conjugate(pair)
    return _limit_constants(pair)


@lru_cache(maxsize=256)
def _limit_constants(pair: ConjugatePair) -> LimitConstants:
    p, q = pair.p, pair.q
    m = _mean_product(pair)
    cov = covariance_gamma_form(pair)
    d = np.array([1.0, -m / p, -m / q])
    sigma2 = float(d @ cov @ d)
    log_c = -(2 * math.log(2.0) + math.log(p) / p + gammaln(1 + 1 / p)
              + math.log(q) / q + gammaln(1 + 1 / q))
    cov.setflags(write=False)
    d.setflags(write=False)
    return LimitConstants(pair=pair, m=m, cov=cov, d=d, sigma2=sigma2,
                          c_norm=math.exp(log_c))
