"""
Portable, seedable pseudorandom numbers.

Every stochastic step in the lab (dataset shuffling, classical noise,
weight initialization, epoch order) draws from PortableRandom so that a
seed reproduces bit-for-bit on any platform and numpy version. The
generator is counter based SplitMix64: draw i of a stream seeded with s is

    mix(s + i * 0x9E3779B97F4A7C15)      for i = 1, 2, 3, ...

where mix is the SplitMix64 finalizer. Uniform floats use the top 53 bits
of a word; normals use the cosine branch of Box-Muller on two uniforms.
"""

import math

import numpy as np

from .config.integrity import derive_seed

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class PortableRandom:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("Seed must be a non-negative integer")
        self.seed = int(seed) & _MASK64
        self.counter = 0

    @classmethod
    def for_stage(cls, seed: int, stage: str) -> "PortableRandom":
        """Create a stream keyed by a stage name under a global seed."""
        return cls(derive_seed(seed, stage))

    def words(self, n: int) -> np.ndarray:
        """Return the next n raw 64-bit words."""
        steps = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + steps * _GOLDEN
            return _mix(z)

    def uniform(self, n: int) -> np.ndarray:
        """Return n floats uniformly distributed on [0, 1)."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def normal(self, n: int, mean: float = 0.0, sigma: float = 1.0) -> np.ndarray:
        """Return n Gaussian samples (Box-Muller, cosine branch)."""
        u = self.uniform(2 * n)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps the log finite
        u2 = u[1::2]
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        return mean + sigma * z

    def permutation(self, n: int) -> np.ndarray:
        """Return a pseudorandom permutation of range(n)."""
        return np.argsort(self.words(n), kind="stable")

    def integers(self, high: int, n: int) -> np.ndarray:
        """Return n integers uniformly drawn from [0, high)."""
        if high <= 0:
            raise ValueError("Upper bound must be positive")
        return np.minimum((self.uniform(n) * high).astype(np.int64), high - 1)
