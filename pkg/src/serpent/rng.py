"""Deterministic, portable random streams used throughout the pipeline.

SplitMix64 is counter-based: the k-th output of a stream with initial state
``s0`` is ``mix64(s0 + k*GOLDEN)``, a pure function of (state, k).  Blocks of
draws can therefore be produced with vectorized uint64 arithmetic while
staying bit-identical to one-at-a-time stepping, and independent (seed,
stream) pairs give decorrelated streams for parallel use.
"""

from __future__ import annotations

import numpy as np

_U64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0x6A09E667F3BCC909


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer (Python-int arithmetic)."""
    z &= _U64
    z = ((z ^ (z >> 30)) * _MIX1) & _U64
    z = ((z ^ (z >> 27)) * _MIX2) & _U64
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    # uint64 array ops wrap modulo 2**64, matching mix64 exactly
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """A deterministic SplitMix64 stream identified by (seed, stream)."""

    def __init__(self, seed: int, stream: int = 0):
        self._state = mix64(seed) ^ mix64(stream ^ _STREAM_SALT)

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _U64
        return mix64(self._state)

    def block_u64(self, n: int) -> np.ndarray:
        """n draws as a uint64 array, bit-identical to n next_u64() calls."""
        ks = np.arange(1, n + 1, dtype=np.uint64)
        out = _mix64_vec(np.uint64(self._state) + ks * np.uint64(_GOLDEN))
        self._state = (self._state + n * _GOLDEN) & _U64
        return out

    def random(self) -> float:
        """One float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        return (self.block_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        m = (n + 1) // 2
        u = self.uniforms(2 * m)
        # log1p(-u) = log(1 - u); 1 - u > 0 since u < 1
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        th = (2.0 * np.pi) * u[1::2]
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(th)
        out[1::2] = r * np.sin(th)
        return out[:n]

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n); modulo bias is negligible for n << 2**64."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % n

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates permutation of range(n)."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx
