"""Counter-derived parallel random streams.

Each replicate ``r`` under a 64-bit ``base_seed`` gets its own xoshiro256**
generator.  The four state words are SplitMix64 outputs number
``4r + 1 .. 4r + 4`` of the sequence seeded with ``base_seed``; SplitMix64
reaches any position in O(1), so stream derivation needs no jumps and no
coordination between workers.  Uniform doubles take the top 53 bits.

Everything is vectorised over arrays of streams so that many replicates can
advance in lockstep; a single stream is the length-one case.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / (1 << 53)


def _u64(x):
    return np.asarray(x, dtype=np.uint64)


def splitmix64_mix(z: np.ndarray) -> np.ndarray:
    z = _u64(z)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix64_at(seed: int, positions: np.ndarray) -> np.ndarray:
    """Outputs number ``positions`` (1-based) of SplitMix64 seeded with ``seed``."""
    with np.errstate(over="ignore"):
        state = np.uint64(seed & MASK64) + _u64(positions) * GOLDEN_GAMMA
        return splitmix64_mix(state)


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Xoshiro256:
    """A batch of independent xoshiro256** generators, one per stream."""

    def __init__(self, base_seed: int, stream_ids):
        ids = _u64(stream_ids).reshape(-1)
        with np.errstate(over="ignore"):
            base = ids * np.uint64(4)
            self.s = np.stack([splitmix64_at(base_seed, base + np.uint64(m + 1)) for m in range(4)])
        self.stream_ids = ids

    def __len__(self) -> int:
        return self.s.shape[1]

    def next_u64(self) -> np.ndarray:
        s0, s1, s2, s3 = self.s
        with np.errstate(over="ignore"):
            result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self.s[3] = _rotl(s3, 45)
        return result

    def uniform(self) -> np.ndarray:
        """Doubles in ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def keep(self, mask: np.ndarray) -> None:
        """Drop the streams where ``mask`` is False."""
        self.s = self.s[:, mask]
        self.stream_ids = self.stream_ids[mask]


@dataclass(frozen=True)
class RandomStream:
    """Handle naming stream ``index`` under ``base_seed``."""

    base_seed: int
    index: int = 0

    def generator(self) -> Xoshiro256:
        return Xoshiro256(self.base_seed, [self.index])
