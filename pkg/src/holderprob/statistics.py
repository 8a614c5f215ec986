"""The Hölder ratio, its first-order decomposition, and a transformer wrapper."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_exponent, check_paired_rows, check_vector
from .constants import ConjugatePair, conjugate, limit_constants
from .exceptions import DegenerateRatioWarning, DomainError
from .sampling import PairSample, RawBatch

__all__ = [
    "RatioDecomposition",
    "holder_ratio",
    "holder_ratio_rows",
    "decompose",
    "decompose_rows",
    "reverse_holder_indicator",
    "HolderRatioTransformer",
]


def _as_pair(pair) -> ConjugatePair:
    return pair if isinstance(pair, ConjugatePair) else conjugate(pair)


def holder_ratio(sample, pair, y=None) -> float:
    """``sum |x_i y_i| / (||x||_p ||y||_q)``, in ``[0, 1]``.

    `sample` is a :class:`PairSample`, or pass the two vectors as
    ``holder_ratio(x, pair, y)``. Sums are compensated (``math.fsum``).
    """
    pair = _as_pair(pair)
    if isinstance(sample, PairSample):
        x, y = sample.x, sample.y
    else:
        x = sample
    x = np.abs(check_vector(x, "x"))
    y = np.abs(check_vector(y, "y"))
    if x.shape != y.shape:
        raise DomainError(f"x and y differ in length: {x.size} vs {y.size}")
    if not x.any() or not y.any():
        raise DomainError("the Hölder ratio is undefined for a zero vector")
    # Pull out the max-norm so the power sums cannot overflow or underflow.
    sx, sy = x.max(), y.max()
    x, y = x / sx, y / sy
    num = math.fsum(x * y)
    if num == 0.0:
        warnings.warn("disjoint supports: Hölder ratio is exactly 0", DegenerateRatioWarning,
                      stacklevel=2)
        return 0.0
    nx = math.fsum(x ** pair.p) ** (1.0 / pair.p)
    ny = math.fsum(y ** pair.q) ** (1.0 / pair.q)
    return num / (nx * ny)


def holder_ratio_rows(x, y, pair) -> np.ndarray:
    """Row-wise Hölder ratio of two ``(N, n)`` arrays (numpy pairwise sums)."""
    pair = _as_pair(pair)
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    if x.ndim != 2 or x.shape != y.shape:
        raise DomainError(f"expected two equal 2-D arrays, got {x.shape} and {y.shape}")
    sx = x.max(axis=1, keepdims=True)
    sy = y.max(axis=1, keepdims=True)
    if np.any(sx == 0.0) or np.any(sy == 0.0):
        raise DomainError("the Hölder ratio is undefined for a zero vector")
    x, y = x / sx, y / sy
    num = (x * y).sum(axis=1)
    den = (x ** pair.p).sum(axis=1) ** (1.0 / pair.p) * (y ** pair.q).sum(axis=1) ** (1.0 / pair.q)
    return num / den


def ratio_from_raw(raw: RawBatch, pair: ConjugatePair) -> np.ndarray:
    """Ratios straight from unnormalized gamma_p draws.

    Normalization and the ball radius cancel in the ratio, so for cone and
    surface draws the statistic is computed from ``|zeta_i|`` and
    ``|zeta_i|^p`` without ever forming the unit vectors. Ball draws go
    through the explicit points so the radius is genuinely exercised.
    """
    if raw.radius_x is not None:
        sx = (raw.x.pw.sum(axis=1) ** (-1.0 / pair.p)) * raw.radius_x
        sy = (raw.y.pw.sum(axis=1) ** (-1.0 / pair.q)) * raw.radius_y
        return holder_ratio_rows(raw.x.mag * sx[:, None], raw.y.mag * sy[:, None], pair)
    num = (raw.x.mag * raw.y.mag).sum(axis=1)
    return num / (raw.x.pw.sum(axis=1) ** (1.0 / pair.p) * raw.y.pw.sum(axis=1) ** (1.0 / pair.q))


@dataclass(frozen=True)
class RatioDecomposition:
    """``ratio = m + (s1 - (m/p) s2 - (m/q) s3) / sqrt(n) + remainder``."""

    ratio: float
    centered_scaled: float
    s1: float
    s2: float
    s3: float
    remainder: float
    n: int

    @property
    def linear_term(self) -> float:
        return self.ratio - self.remainder


def decompose_rows(zeta, eta, pair) -> dict[str, np.ndarray]:
    """Vectorized :func:`decompose` over rows of unnormalized vectors."""
    pair = _as_pair(pair)
    consts = limit_constants(pair)
    m, p, q = consts.m, pair.p, pair.q
    az = np.abs(np.atleast_2d(np.asarray(zeta, dtype=float)))
    ae = np.abs(np.atleast_2d(np.asarray(eta, dtype=float)))
    if az.shape != ae.shape:
        raise DomainError(f"zeta and eta differ in shape: {az.shape} vs {ae.shape}")
    n = az.shape[1]
    rt = math.sqrt(n)
    s1 = (az * ae - m).sum(axis=1) / rt
    s2 = (az ** p - 1.0).sum(axis=1) / rt
    s3 = (ae ** q - 1.0).sum(axis=1) / rt
    ratio = holder_ratio_rows(az, ae, pair)
    linear = m + (s1 - (m / p) * s2 - (m / q) * s3) / rt
    return {"ratio": ratio, "centered_scaled": rt * (ratio - m), "s1": s1, "s2": s2,
            "s3": s3, "remainder": ratio - linear}


def decompose(zeta, eta, pair) -> RatioDecomposition:
    """Split the ratio of unnormalized gamma_p / gamma_q vectors into its
    linear part in the three normalized sums and a second-order remainder."""
    zeta = check_vector(zeta, "zeta")
    eta = check_vector(eta, "eta")
    if not zeta.any() or not eta.any():
        raise DomainError("zeta and eta must be nonzero")
    parts = decompose_rows(zeta[None, :], eta[None, :], pair)
    return RatioDecomposition(n=zeta.size, **{k: float(v[0]) for k, v in parts.items()})


def reverse_holder_indicator(sample, pair, t: float) -> bool:
    """Whether ``sum |x_i y_i| >= (t/sqrt(n) + m) ||x||_p ||y||_q``."""
    pair = _as_pair(pair)
    m = limit_constants(pair).m
    n = sample.n if isinstance(sample, PairSample) else np.asarray(sample).size
    return bool(holder_ratio(sample, pair) >= t / math.sqrt(n) + m)


class HolderRatioTransformer(TransformerMixin, BaseEstimator):
    """Map rows ``[x_1..x_n, y_1..y_n]`` to Hölder-ratio features.

    Parameters
    ----------
    p : float
        Exponent for the x-block; the y-block uses the conjugate ``q``.
    output : {"ratio", "centered", "decomposition"}
        ``"ratio"`` gives one column R, ``"centered"`` gives
        ``sqrt(n) (R - m)``, ``"decomposition"`` gives the six columns
        ``ratio, centered_scaled, s1, s2, s3, remainder`` (rows are then read
        as unnormalized gamma_p / gamma_q vectors).
    """

    _columns = ("ratio", "centered_scaled", "s1", "s2", "s3", "remainder")

    def __init__(self, p: float = 2.0, output: str = "ratio"):
        self.p = p
        self.output = output

    def fit(self, X, y=None):
        check_exponent(self.p)
        if self.output not in ("ratio", "centered", "decomposition"):
            raise ValueError(f"unknown output {self.output!r}")
        xb, _ = check_paired_rows(X)
        self.pair_ = conjugate(self.p)
        self.constants_ = limit_constants(self.pair_)
        self.n_features_in_ = 2 * xb.shape[1]
        self.dimension_ = xb.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "pair_")
        xb, yb = check_paired_rows(X)
        if 2 * xb.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {2 * xb.shape[1]} features, expected {self.n_features_in_}")
        if self.output == "decomposition":
            parts = decompose_rows(xb, yb, self.pair_)
            return np.column_stack([parts[c] for c in self._columns])
        ratio = holder_ratio_rows(xb, yb, self.pair_)
        if self.output == "centered":
            ratio = math.sqrt(self.dimension_) * (ratio - self.constants_.m)
        return ratio[:, None]

    def get_feature_names_out(self, input_features=None):
        if self.output == "decomposition":
            return np.asarray(self._columns, dtype=object)
        return np.asarray(["ratio" if self.output == "ratio" else "centered_scaled"], dtype=object)
