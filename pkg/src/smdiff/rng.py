"""Seedable, portable random number generation.

Traces must be reproducible bit for bit across runs and platforms, so noise
is drawn from an explicitly specified generator rather than whatever the
platform's default happens to be: splitmix64 for the integer stream and a
Box-Muller transform for Gaussian variates.
"""

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

DEFAULT_SEED = 1


class SplitMix64:
    """splitmix64 generator (Steele, Lea & Flood), 64-bit state.

    Deterministic given the seed; the same seed yields the same stream on
    every platform because only masked integer arithmetic is involved.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_gauss = None

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        """Uniform double in [0, 1) with 53-bit resolution."""
        return (self.next_uint64() >> 11) * 2.0 ** -53

    def next_gauss(self) -> float:
        """Standard normal variate via the Box-Muller transform.

        Pairs are generated from two uniforms; the sine half is cached so
        consecutive calls consume exactly one pair of uint64 draws per two
        variates.
        """
        if self._spare_gauss is not None:
            value = self._spare_gauss
            self._spare_gauss = None
            return value
        # u1 in (0, 1] so the log is finite; u2 in [0, 1).
        u1 = ((self.next_uint64() >> 11) + 1) * 2.0 ** -53
        u2 = self.next_uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare_gauss = radius * math.sin(angle)
        return radius * math.cos(angle)
