"""Samplers for the uniform ball, cone and surface measures on l_p^n.

Everything is built on the p-generalized Gaussian ``gamma_p`` (density
proportional to ``exp(-|x|^p / p)``), drawn as ``sign * (p G)^{1/p}`` with
``G ~ Gamma(1/p, 1)``. Cone-measure points are ``zeta / ||zeta||_p``; uniform
ball points add an independent radius ``U^{1/n}``; surface-measure points
reweight cone points by ``(sum |x_i|^{2p-2})^{1/2}`` either by rejection or by
self-normalized importance weights.

Random numbers are consumed in a fixed order per batch: x-side magnitudes,
y-side magnitudes, radii (ball only), then signs. Code that needs only
magnitudes (the ratio statistic) therefore sees exactly the same magnitudes
as code that also materializes signed points.
"""

from __future__ import annotations

import enum
import json
import math
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_dimension, check_vector
from .constants import ConjugatePair, conjugate
from .exceptions import DomainError, SamplerError
from .rng import RngLike, as_generator

__all__ = [
    "ModelKind",
    "SurfaceMethod",
    "DistributionModel",
    "PairSample",
    "PairBatch",
    "sample_pgg",
    "sample_cone",
    "sample_ball",
    "sample_surface",
    "sample_pairs",
    "surface_weight",
    "surface_envelope",
    "write_samples",
    "read_samples",
]

MAX_REJECTIONS = 10**6
IMPORTANCE_DIMENSION_THRESHOLD = 1000


class ModelKind(str, enum.Enum):
    BALL = "ball"
    CONE = "cone"
    SURFACE = "surface"


class SurfaceMethod(str, enum.Enum):
    REJECTION = "reject"
    IMPORTANCE = "weight"


@dataclass(frozen=True)
class DistributionModel:
    kind: ModelKind = ModelKind.CONE
    surface_method: SurfaceMethod | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.surface_method is not None:
            object.__setattr__(self, "surface_method", SurfaceMethod(self.surface_method))

    def resolved_method(self, n: int) -> SurfaceMethod | None:
        """Surface method actually used at dimension `n` (None off the surface)."""
        if self.kind is not ModelKind.SURFACE:
            return None
        if self.surface_method is not None:
            return self.surface_method
        if n > IMPORTANCE_DIMENSION_THRESHOLD:
            return SurfaceMethod.IMPORTANCE
        return SurfaceMethod.REJECTION

    def is_weighted(self, n: int) -> bool:
        return self.resolved_method(n) is SurfaceMethod.IMPORTANCE

    def label(self, n: int | None = None) -> str:
        method = self.resolved_method(n) if n is not None else self.surface_method
        if method is None:
            return self.kind.value
        return f"{self.kind.value}-{method.value}"

    @classmethod
    def parse(cls, kind: str, surface_method: str | None = None) -> "DistributionModel":
        return cls(ModelKind(kind), None if surface_method is None else SurfaceMethod(surface_method))


@dataclass(frozen=True, eq=False)
class PairSample:
    x: np.ndarray
    y: np.ndarray
    weight: float = 1.0

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class PairBatch:
    """Rows of ``x`` and ``y`` with one importance weight per row."""

    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def __getitem__(self, i) -> PairSample:
        return PairSample(self.x[i], self.y[i], float(self.weight[i]))


class _Side(NamedTuple):
    pw: np.ndarray    # |zeta_i|^e
    mag: np.ndarray   # |zeta_i|
    sign: np.ndarray | None


def _as_pair(pair) -> ConjugatePair:
    return pair if isinstance(pair, ConjugatePair) else conjugate(pair)


def _draw_pgg(gen: np.random.Generator, e: float, shape) -> _Side:
    if e == 2.0:
        # gamma_2 is the standard normal; same law, much cheaper to draw.
        z = gen.standard_normal(shape)
        return _Side(z * z, np.abs(z), np.where(z < 0.0, -1.0, 1.0))
    pw = e * gen.standard_gamma(1.0 / e, shape)
    return _Side(pw, pw ** (1.0 / e), None)


def _draw_signs(gen: np.random.Generator, shape) -> np.ndarray:
    return np.where(gen.random(shape) < 0.5, -1.0, 1.0)


def _draw_side(gen: np.random.Generator, e: float, size: int, n: int) -> _Side:
    side = _draw_pgg(gen, e, (size, n))
    # ||zeta||_p = 0 has probability zero; redraw such rows if they ever occur.
    while True:
        bad = np.flatnonzero(side.pw.sum(axis=1) <= 0.0)
        if bad.size == 0:
            return side
        redo = _draw_pgg(gen, e, (bad.size, n))
        side.pw[bad], side.mag[bad] = redo.pw, redo.mag
        if side.sign is not None:
            side.sign[bad] = redo.sign


def _log_surface_weight_from_powers(pw: np.ndarray, e: float) -> np.ndarray:
    # |x_i|^{2e-2} = pw_i^a / S^a with a = (2e - 2)/e and S = sum(pw).
    a = (2.0 * e - 2.0) / e
    s = pw.sum(axis=1)
    return 0.5 * np.log((pw ** a).sum(axis=1)) - 0.5 * a * np.log(s)


def surface_envelope(n: int, p: float) -> float:
    """Exact supremum of ``(sum |x_i|^{2p-2})^{1/2}`` over the unit p-sphere.

    With ``t_i = |x_i|^p`` the weight squared is ``sum t_i^a`` on the simplex,
    ``a = 2 - 2/p``. For ``p >= 2`` (``a >= 1``) the sum is convex and peaks at
    a vertex (value 1); for ``p < 2`` it is concave and the Lagrange condition
    ``a t_i^{a-1} = const`` puts the peak at the barycenter, ``n^{1-a}``.
    """
    return max(1.0, float(n) ** ((2.0 - p) / (2.0 * p)))


def _surface_side(gen: np.random.Generator, e: float, n: int, count: int) -> _Side:
    log_env = math.log(surface_envelope(n, e))
    floor_rate = float(n) ** (-abs(2.0 - e) / (2.0 * e))
    parts: list[_Side] = []
    got = 0
    streak = 0  # rejections since the last accepted draw
    while got < count:
        need = count - got
        trial = int(math.ceil(need / floor_rate)) + 4
        side = _draw_side(gen, e, trial, n)
        log_w = _log_surface_weight_from_powers(side.pw, e)
        u = gen.random(trial)
        keep = np.flatnonzero(np.log(u) < log_w - log_env)[:need]
        streak = streak + trial if keep.size == 0 else trial - 1 - keep[-1]
        if streak > MAX_REJECTIONS:
            raise SamplerError(
                f"surface rejection exceeded {MAX_REJECTIONS} rejections (n={n}, p={e})")
        if keep.size:
            parts.append(_Side(side.pw[keep], side.mag[keep],
                               None if side.sign is None else side.sign[keep]))
            got += keep.size
    if len(parts) == 1:
        return parts[0]
    sign = None if parts[0].sign is None else np.concatenate([s.sign for s in parts])
    return _Side(np.concatenate([s.pw for s in parts]),
                 np.concatenate([s.mag for s in parts]), sign)


class RawBatch(NamedTuple):
    """Unnormalized draws behind a batch of pairs, plus what the model adds."""

    x: _Side
    y: _Side
    radius_x: np.ndarray | None
    radius_y: np.ndarray | None
    log_weight: np.ndarray | None


def draw_raw(model: DistributionModel, n: int, pair: ConjugatePair,
             gen: np.random.Generator, size: int) -> RawBatch:
    method = model.resolved_method(n)
    if method is SurfaceMethod.REJECTION:
        xs = _surface_side(gen, pair.p, n, size)
        ys = _surface_side(gen, pair.q, n, size)
    else:
        xs = _draw_side(gen, pair.p, size, n)
        ys = _draw_side(gen, pair.q, size, n)
    rx = ry = None
    if model.kind is ModelKind.BALL:
        rx = gen.random(size) ** (1.0 / n)
        ry = gen.random(size) ** (1.0 / n)
    log_w = None
    if method is SurfaceMethod.IMPORTANCE:
        log_w = (_log_surface_weight_from_powers(xs.pw, pair.p)
                 + _log_surface_weight_from_powers(ys.pw, pair.q))
    return RawBatch(xs, ys, rx, ry, log_w)


def _realize(raw: RawBatch, pair: ConjugatePair, gen: np.random.Generator) -> PairBatch:
    def one(side: _Side, e: float, radius):
        sign = side.sign if side.sign is not None else _draw_signs(gen, side.mag.shape)
        scale = side.pw.sum(axis=1) ** (-1.0 / e)
        if radius is not None:
            scale = scale * radius
        return sign * side.mag * scale[:, None]

    x = one(raw.x, pair.p, raw.radius_x)
    y = one(raw.y, pair.q, raw.radius_y)
    weight = np.ones(x.shape[0]) if raw.log_weight is None else np.exp(raw.log_weight)
    return PairBatch(x, y, weight)


def sample_pairs(model: DistributionModel, n: int, pair, rng: RngLike, size: int) -> PairBatch:
    """Draw `size` independent pairs ``(x, y)`` under `model`."""
    n = check_dimension(n)
    pair = _as_pair(pair)
    gen = as_generator(rng)
    return _realize(draw_raw(model, n, pair, gen, int(size)), pair, gen)


def sample_pgg(pair, exponent_choice: str = "p", rng: RngLike = 0, size=None):
    """Draw from ``gamma_p`` (or ``gamma_q``); a float when `size` is None."""
    e = _as_pair(pair).exponent(exponent_choice)
    gen = as_generator(rng)
    shape = 1 if size is None else size
    side = _draw_pgg(gen, e, shape)
    sign = side.sign if side.sign is not None else _draw_signs(gen, side.mag.shape)
    out = sign * side.mag
    return float(out.reshape(-1)[0]) if size is None else out


def sample_cone(n: int, pair, rng: RngLike) -> PairSample:
    return sample_pairs(DistributionModel(ModelKind.CONE), n, pair, rng, 1)[0]


def sample_ball(n: int, pair, rng: RngLike) -> PairSample:
    return sample_pairs(DistributionModel(ModelKind.BALL), n, pair, rng, 1)[0]


def sample_surface(n: int, pair, rng: RngLike, method: SurfaceMethod | str | None = None) -> PairSample:
    model = DistributionModel(ModelKind.SURFACE, None if method is None else SurfaceMethod(method))
    return sample_pairs(model, n, pair, rng, 1)[0]


def surface_weight(x, p: float) -> float:
    """Unnormalized density of the surface measure w.r.t. the cone measure."""
    x = check_vector(x)
    p = float(p)
    ax = np.abs(x)
    norm = float(np.sum(ax ** p) ** (1.0 / p))
    if abs(norm - 1.0) > 1e-8:
        raise DomainError(f"x must lie on the unit {p}-sphere (||x||_p = {norm!r})")
    return float(math.sqrt(math.fsum(ax ** (2.0 * p - 2.0))))


# Binary dump -----------------------------------------------------------------
#
# 32-byte prefix: magic (8) | format version u32 | reserved u32 |
# JSON header length u64 | record count u64, all little-endian; then the UTF-8
# JSON header; then row-major little-endian float64 records
# [x_1..x_n, y_1..y_n, weight].

_MAGIC = b"HOLDRSMP"
_PREFIX = struct.Struct("<8sIIQQ")
_VERSION = 1


def write_samples(path, batch: PairBatch, *, p: float, model: str, seed: int, stream_id: int) -> None:
    header = json.dumps({"n": batch.n, "p": p, "model": model, "seed": seed,
                         "stream_id": stream_id}, sort_keys=True).encode("utf-8")
    records = np.concatenate([batch.x, batch.y, batch.weight[:, None]], axis=1)
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(_MAGIC, _VERSION, 0, len(header), records.shape[0]))
        fh.write(header)
        fh.write(np.ascontiguousarray(records, dtype="<f8").tobytes())


def read_samples(path) -> tuple[dict, PairBatch]:
    with open(path, "rb") as fh:
        magic, version, _, hlen, count = _PREFIX.unpack(fh.read(_PREFIX.size))
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"{path}: not a sample dump (magic={magic!r}, version={version})")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        n = int(header["n"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count * (2 * n + 1):
        raise ValueError(f"{path}: truncated payload")
    rows = data.reshape(count, 2 * n + 1).astype(float)
    return header, PairBatch(rows[:, :n], rows[:, n:2 * n], rows[:, 2 * n])
