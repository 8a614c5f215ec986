"""Input validation helpers shared by the public functions and estimators."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError

P_MIN = 1.0 + 1e-6
P_MAX = 1e6


# Exponent-only helpers (moments, samplers) also see the conjugate q, whose
# range is the image of [P_MIN, P_MAX] under p -> p/(p-1).
Q_MIN = P_MAX / (P_MAX - 1.0)
Q_MAX = P_MIN / (P_MIN - 1.0)


def check_exponent(p, *, either_side: bool = False) -> float:
    """Return `p` as a float, rejecting values outside ``[1 + 1e-6, 1e6]``.

    With ``either_side=True`` the range is widened to everything a conjugate
    of an accepted exponent can be.
    """
    try:
        p = float(p)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"exponent must be a real number, got {p!r}") from exc
    if not math.isfinite(p):
        raise DomainError(f"exponent must be finite, got {p}")
    if p <= 1.0 or abs(p - 1.0) <= 1e-12:
        raise DomainError(f"exponent must exceed 1, got {p}")
    lo, hi = (min(P_MIN, Q_MIN), max(P_MAX, Q_MAX)) if either_side else (P_MIN, P_MAX)
    if p < lo * (1 - 1e-12) or p > hi * (1 + 1e-12):
        raise DomainError(f"exponent {p} outside supported range [{lo}, {hi:g}]")
    return p


def check_dimension(n) -> int:
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def check_vector(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} contains non-finite entries")
    return x


def check_paired_rows(X) -> tuple[np.ndarray, np.ndarray]:
    """Split a 2-D array of rows ``[x_1..x_n, y_1..y_n]`` into ``(x, y)`` blocks."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"expected a 2-D array, got shape {X.shape}")
    if X.shape[1] == 0 or X.shape[1] % 2:
        raise DomainError(
            f"expected an even number of columns [x | y], got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DomainError("input contains non-finite entries")
    n = X.shape[1] // 2
    return X[:, :n], X[:, n:]
