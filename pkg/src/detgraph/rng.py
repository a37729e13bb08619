"""Counter-based random stream.

All randomness in the package flows through :class:`RandomStream`, a SplitMix64-style
counter mix: draw ``i`` of stream ``key`` is ``mix64(key + (i+1)*GAMMA)``. The same
arithmetic is implemented for the jit kernels in ``kernels.py``, so a given
(seed, counter) produces identical draws under either backend, and any draw can be
reproduced without replaying the ones before it.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / float(1 << 53)


def mix64(z: np.uint64) -> np.uint64:
    with np.errstate(over="ignore"):
        z = np.uint64(z)
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class RandomStream:
    """Deterministic stream of uniforms keyed by a 64-bit seed.

    ``child(tag)`` derives an independent stream; children with distinct tags (or
    from distinct parents) never share draws.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int, counter: int = 0):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise InvalidArgument(f"seed must be an integer, got {type(seed).__name__}")
        if int(seed) < 0 or int(seed) >= 1 << 64:
            raise InvalidArgument("seed must fit in an unsigned 64-bit integer")
        self.key = np.uint64(int(seed))
        self.counter = np.uint64(counter)

    def child(self, tag: int) -> "RandomStream":
        with np.errstate(over="ignore"):
            inner = np.uint64(tag & 0xFFFFFFFFFFFFFFFF) + GAMMA
        key = mix64(self.key ^ mix64(inner))
        return RandomStream(int(key))

    def next_u64(self) -> int:
        self.counter += np.uint64(1)
        with np.errstate(over="ignore"):
            return int(mix64(self.key + self.counter * GAMMA))

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1) (vectorized, same values as n uniform() calls)."""
        idx = np.arange(1, n + 1, dtype=np.uint64) + self.counter
        self.counter += np.uint64(n)
        with np.errstate(over="ignore"):
            z = self.key + idx * GAMMA
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * _INV53

    def integers(self, n: int, high: int) -> np.ndarray:
        """n integers uniform on [0, high) via floor(u * high)."""
        if high < 1:
            raise InvalidArgument("high must be at least 1")
        return np.minimum((self.uniforms(n) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of range(n): argsort of n iid uniforms."""
        return np.argsort(self.uniforms(n), kind="stable")


def as_stream(rng) -> RandomStream:
    """Accept either an integer seed or an existing RandomStream."""
    if isinstance(rng, RandomStream):
        return rng
    return RandomStream(rng)
