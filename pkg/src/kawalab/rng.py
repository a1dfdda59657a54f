"""Seeded 64-bit linear congruential generator for reproducible test suites.

Constants are Knuth's MMIX LCG: multiplier 6364136223846793005, increment
1442695040888963407, modulus 2**64.  Uniform doubles are formed from the top
53 bits of the state, so any implementation of the same recurrence reproduces
the exact same sample streams.
"""

from __future__ import annotations

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg64:
    """Deterministic uniform generator; never touches global RNG state."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state * _MULT + _INC) & _MASK
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * (self.next_u64() >> 11) / float(1 << 53)
