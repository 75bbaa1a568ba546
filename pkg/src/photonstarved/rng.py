"""Named, seedable, splittable random streams.

Every stochastic routine takes an explicit stream. A stream is a thin wrapper
over :class:`numpy.random.SeedSequence`: children are derived from the
parent's entropy plus a stable key, so a given (seed, name, shard) triple
always yields the same bits no matter how many workers consume the shards.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


@dataclass(frozen=True)
class RandomStream:
    seed: int
    path: tuple = field(default=())

    def child(self, name: str) -> "RandomStream":
        return RandomStream(self.seed, self.path + (_name_key(name),))

    def split(self, n: int) -> list["RandomStream"]:
        """``n`` independent sub-streams, indexed 0..n-1."""
        return [RandomStream(self.seed, self.path + (i,)) for i in range(n)]

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=self.path)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))


def as_generator(stream) -> np.random.Generator:
    """Accept a RandomStream, a Generator, or an int seed."""
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RandomStream):
        return stream.generator()
    if isinstance(stream, (int, np.integer)):
        return RandomStream(int(stream)).generator()
    raise TypeError(f"expected RandomStream, Generator or int seed, got {type(stream).__name__}")


def as_stream(stream) -> RandomStream:
    if isinstance(stream, RandomStream):
        return stream
    if isinstance(stream, (int, np.integer)):
        return RandomStream(int(stream))
    raise TypeError(f"sharded Monte Carlo needs a RandomStream or int seed, got {type(stream).__name__}")
