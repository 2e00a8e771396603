"""
Seeded random sampling.

``SeededRng`` wraps numpy's ``Generator`` on the PCG64 bit generator. The same
(seed, keys) pair always yields the same stream, on every platform numpy
supports. ``child`` derives independent sub-streams (per layer, per epoch,
per trial) without consuming the parent stream.
"""

import numpy as np

from utils.exceptions import ArgumentError


class SeededRng:

    ALGORITHM = "PCG64"

    def __init__(self, seed: int, keys: tuple = ()):
        seed = int(seed)
        if not 0 <= seed < 2 ** 64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.keys = tuple(int(k) for k in keys)
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=self.keys)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def child(self, *keys) -> "SeededRng":
        return SeededRng(self.seed, self.keys + tuple(keys))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, keys={self.keys}, algorithm={self.ALGORITHM})"


def sample_gaussian(rng: SeededRng, shape, mean: float = 0.0, std: float = 1.0,
                    dtype=np.float64) -> np.ndarray:
    if std < 0:
        raise ArgumentError(f"std must be >= 0, got {std}")
    z = rng.generator.standard_normal(size=tuple(shape))
    return (mean + std * z).astype(dtype, copy=False)


def sample_uniform(rng: SeededRng, shape, lo: float, hi: float, dtype=np.float64) -> np.ndarray:
    if lo > hi:
        raise ArgumentError(f"lo must be <= hi, got lo={lo}, hi={hi}")
    return rng.generator.uniform(lo, hi, size=tuple(shape)).astype(dtype, copy=False)
