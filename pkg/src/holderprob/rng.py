"""Counter-based random streams.

A stream is the pair ``(seed, stream_id)``; it is mapped injectively onto the
128-bit Philox key, so distinct pairs are independent by construction. Within
a stream, draw blocks occupy disjoint ranges of the 256-bit counter (the block
index sits in the top 64 bits), which is what lets parallel shards split the
work without ever overlapping or depending on the shard count.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Union

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    @property
    def key(self) -> int:
        return (int(self.stream_id) << 64) | int(self.seed)

    def generator(self, block: int = 0) -> np.random.Generator:
        """Fresh generator positioned at the start of draw block `block`."""
        if not 0 <= block <= _MASK64:
            raise ValueError(f"block index out of range: {block}")
        return np.random.Generator(
            np.random.Philox(key=self.key, counter=int(block) << 192))

    def substream(self, label: str) -> "RngStream":
        """Derive a named stream (stable across runs and platforms)."""
        tag = zlib.crc32(label.encode("utf-8"))
        return RngStream(self.seed, ((int(self.stream_id) << 32) ^ tag) & _MASK64)


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept an :class:`RngStream`, a bare seed or a live ``Generator``.

    An ``RngStream`` always yields a fresh generator, so functions fed the
    same stream value reproduce the same draws.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
