"""Deterministic uniform generator for synthetic weights and fixtures.

xorshift64* with the classic (12, 25, 27) shift triple and finalizing
multiplier 2685821657736338717.  The seed is first mixed through one
splitmix64 step so that any 64-bit seed (including 0) yields a valid
nonzero state.  All arithmetic is 64-bit integer, so streams are
bit-identical on every platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_MULTIPLIER = 2685821657736338717

# splitmix64 constants (Steele, Lea & Flood mixing function)
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB


def _splitmix64(seed: int) -> int:
    z = (seed + _SM_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _SM_MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _SM_MIX2) & _MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """Sequential 64-bit generator with documented, frozen constants."""

    def __init__(self, seed: int):
        state = _splitmix64(seed & _MASK64)
        # xorshift state must never be zero
        self._state = state if state != 0 else _SM_GAMMA

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULTIPLIER) & _MASK64

    def next_unit(self) -> float:
        """Uniform double in [0, 1): the top 53 bits over 2**53."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_centered(self) -> float:
        """Uniform double in [-0.5, 0.5)."""
        return self.next_unit() - 0.5

    def centered_f32(self, count: int) -> np.ndarray:
        """`count` draws from [-0.5, 0.5), each rounded to float32."""
        return np.fromiter((self.next_centered() for _ in range(count)), dtype=np.float32, count=count)

    def bytes_u8(self, count: int) -> np.ndarray:
        """`count` uniform bytes (the top 8 bits of each draw)."""
        return np.fromiter((self.next_u64() >> 56 for _ in range(count)), dtype=np.uint8, count=count)
