"""Deterministic random streams from a 64-bit seed.

The generator is a SplitMix-style counter stream so that identical seeds
reproduce bit-identically across platforms and sessions:

    state_i  = (seed + (i + 1) * GOLDEN) mod 2^64
    output_i = mix(state_i)

with ``GOLDEN = 0x9E3779B97F4A7C15`` and the finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

All arithmetic is modulo 2^64. Uniform doubles take the top 53 bits,
``u_i = (output_i >> 11) * 2^-53``; Gaussian samples come from the
Box-Muller transform applied to consecutive pairs, with the first uniform
shifted into (0, 1] to keep the logarithm finite. Because the stream is a
pure function of (seed, counter), draws can be vectorized and resumed.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = 0xFFFFFFFFFFFFFFFF
_TWO53 = float(1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, index: int) -> int:
    """Derive an independent sub-stream seed (used e.g. for re-draws)."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + np.uint64((index + 1) & _MASK) * GOLDEN
    return int(_mix(z))


class SplitMix64:
    """Counter-based SplitMix64 stream over a 64-bit seed."""

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & _MASK)
        self._count = 0

    def uint64(self, count: int) -> np.ndarray:
        """Next ``count`` raw 64-bit outputs."""
        idx = np.arange(self._count + 1, self._count + count + 1, dtype=np.uint64)
        self._count += count
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * GOLDEN)

    def uniform(self, count: int) -> np.ndarray:
        """``count`` doubles uniform on [0, 1)."""
        return (self.uint64(count) >> np.uint64(11)).astype(np.float64) / _TWO53

    def normal(self, count: int) -> np.ndarray:
        """``count`` standard normal doubles (Box-Muller on uniform pairs)."""
        pairs = (count + 1) // 2
        raw = self.uint64(2 * pairs)
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) / _TWO53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:count]

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        return self.normal(rows * cols).reshape(rows, cols)
