"""Brute-force grid oracles for the Legendre transform and the contracted rate.

Nothing here is clever on purpose: the supremum over tilts is a max over a
dense 3-D grid and the infimum over ``(v, w)`` is a min over a dense 2-D grid.
Both grids are re-centered and shrunk over a few zoom levels. The tilt grid
is shared by every mean point at a level, so one batch of Lambda values and
one chunked matrix product serve the whole mean grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import ConjugatePair, conjugate
from .rates import QuadratureSpec, cgf_grid

__all__ = ["GridOracleSpec", "OracleResult", "grid_legendre", "grid_rate"]


@dataclass(frozen=True)
class GridOracleSpec:
    tilt_points: int = 41
    mean_points: int = 61
    v_range: tuple = (0.2, 5.0)
    tilt_box: tuple = ((-3.0, 2.0), (-3.0, None), (-3.0, None))
    levels: int = 7
    margin: float = 1e-3
    zoom_cells: int = 4


@dataclass(frozen=True)
class OracleResult:
    value: float
    v: float
    w: float
    theta: np.ndarray = field(repr=False)
    history: tuple = field(repr=False, default=())


def _as_pair(pair) -> ConjugatePair:
    return pair if isinstance(pair, ConjugatePair) else conjugate(pair)


def _initial_box(pair, spec):
    lo, hi = [], []
    caps = (None, 1.0 / pair.p, 1.0 / pair.q)
    for (a, b), cap in zip(spec.tilt_box, caps):
        lo.append(a)
        hi.append(cap if b is None else b)
    return np.array(lo), np.array(hi)


def _tilt_grid(lo, hi, k, pair, margin, quad):
    axes = [np.linspace(lo[i], hi[i], k) for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    # Keep a relative margin from the boundary, where Lambda blows up anyway.
    r, s, t = grid.T
    a, b = 1.0 - pair.p * s, 1.0 - pair.q * t
    ok = (a > margin) & (b > margin)
    bound = np.where(ok, np.abs(a) ** (1 / pair.p) * np.abs(b) ** (1 / pair.q), 0.0)
    ok &= r < (1.0 - margin) * bound
    grid = grid[ok]
    lam = cgf_grid(grid, pair, quad)
    keep = np.isfinite(lam)
    spacing = (hi - lo) / (k - 1)
    return grid[keep], lam[keep], spacing


def _max_affine(mu, grid, lam, chunk=256):
    """Row-wise ``max_j <mu_i, theta_j> - lam_j`` and its argmax."""
    vals = np.empty(mu.shape[0])
    idx = np.empty(mu.shape[0], dtype=int)
    for lo in range(0, mu.shape[0], chunk):
        scores = mu[lo:lo + chunk] @ grid.T - lam
        j = np.argmax(scores, axis=1)
        idx[lo:lo + chunk] = j
        vals[lo:lo + chunk] = scores[np.arange(j.size), j]
    return vals, idx


def _box_around(points, spacing, cells):
    return points.min(axis=0) - cells * spacing, points.max(axis=0) + cells * spacing


def grid_legendre(mu, pair, spec: GridOracleSpec = GridOracleSpec(),
                  quad: QuadratureSpec = QuadratureSpec()) -> OracleResult:
    """Grid supremum of ``<theta, mu> - Lambda(theta)`` with zoom refinement."""
    pair = _as_pair(pair)
    mu = np.asarray(mu, dtype=float)[None, :]
    lo, hi = _initial_box(pair, spec)
    history = []
    for _ in range(spec.levels):
        grid, lam, spacing = _tilt_grid(lo, hi, spec.tilt_points, pair, spec.margin, quad)
        val, j = _max_affine(mu, grid, lam)
        theta = grid[j[0]]
        history.append(float(val[0]))
        lo, hi = _box_around(theta[None, :], spacing, spec.zoom_cells)
    return OracleResult(float(val[0]), float(mu[0, 1]), float(mu[0, 2]), theta, tuple(history))


def grid_rate(x: float, pair, spec: GridOracleSpec = GridOracleSpec(),
              quad: QuadratureSpec = QuadratureSpec()) -> OracleResult:
    """Grid version of ``inf_{v,w} Lambda*(x v^{1/p} w^{1/q}, v, w)``."""
    pair = _as_pair(pair)
    if x <= 0:
        return OracleResult(math.inf, math.nan, math.nan, np.full(3, np.nan))
    lo, hi = _initial_box(pair, spec)
    llo, lhi = math.log(spec.v_range[0]), math.log(spec.v_range[1])
    c_lo, c_hi = np.array([llo, llo]), np.array([lhi, lhi])
    k = spec.mean_points
    history = []
    for _ in range(spec.levels):
        grid, lam, spacing = _tilt_grid(lo, hi, spec.tilt_points, pair, spec.margin, quad)
        lv = np.linspace(c_lo[0], c_hi[0], k)
        lw = np.linspace(c_lo[1], c_hi[1], k)
        zv, zw = (a.ravel() for a in np.meshgrid(lv, lw, indexing="ij"))
        v, w = np.exp(zv), np.exp(zw)
        mu = np.column_stack([x * v ** (1 / pair.p) * w ** (1 / pair.q), v, w])
        vals, idx = _max_affine(mu, grid, lam)
        i = int(np.argmin(vals))
        history.append(float(vals[i]))
        mstep = (c_hi - c_lo) / (k - 1)
        center = np.array([zv[i], zw[i]])
        c_lo = np.maximum(center - spec.zoom_cells * mstep, llo)
        c_hi = np.minimum(center + spec.zoom_cells * mstep, lhi)
        # Next tilt box: cover the maximizers of every mean point kept in the window.
        inside = ((zv >= c_lo[0] - 1e-12) & (zv <= c_hi[0] + 1e-12)
                  & (zw >= c_lo[1] - 1e-12) & (zw <= c_hi[1] + 1e-12))
        lo, hi = _box_around(grid[idx[inside]], spacing, spec.zoom_cells)
    return OracleResult(float(vals[i]), float(v[i]), float(w[i]), grid[idx[i]], tuple(history))
