"""Portable deterministic randomness for reproducible dataset builds.

A 64-bit linear congruential generator with Knuth's MMIX constants
(multiplier 6364136223846793005, increment 1442695040888963407), plus a
splitmix-style mixer for deriving independent streams. Chosen over the
stdlib generator so the exact same selections can be reproduced from the
seed in any language; statistical quality beyond that is irrelevant here.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_LCG_MUL = 6364136223846793005
_LCG_INC = 1442695040888963407

_MIX_GAMMA = 0x9E3779B97F4A7C15
_MIX_M1 = 0xBF58476D1CE4E5B9
_MIX_M2 = 0x94D049BB133111EB


def mix64(*parts: int) -> int:
    """Fold integers into one well-spread 64-bit value (splitmix64 finalizer)."""
    acc = 0
    for part in parts:
        acc = (acc + (part & MASK64) + _MIX_GAMMA) & MASK64
        acc ^= acc >> 30
        acc = (acc * _MIX_M1) & MASK64
        acc ^= acc >> 27
        acc = (acc * _MIX_M2) & MASK64
        acc ^= acc >> 31
    return acc


class Lcg64:
    """Seeded sequential generator; every draw advances the state once."""

    def __init__(self, seed: int):
        self.state = mix64(seed)

    def next_u64(self) -> int:
        self.state = (self.state * _LCG_MUL + _LCG_INC) & MASK64
        return self.state

    def below(self, n: int) -> int:
        """Uniform-enough integer in [0, n) via the multiply-shift reduction."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, high index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
