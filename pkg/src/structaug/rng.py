"""Deterministic pseudo-random numbers used for every stochastic decision.

The generator is a plain SplitMix64 stream.  It is tiny, fast, and trivially
portable: any consumer of the published file formats (for example an external
training-loop binding) can reproduce a draw sequence from the same 64-bit
seed using only integer arithmetic, which is why no stdlib or numpy generator
is used anywhere in the sampling paths.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3

# Domain separators so that distinct pipeline stages seeded from the same
# user seed do not share streams.
DOMAIN_EXPLORE = 0x7452EE5D1B3467A1
DOMAIN_STREAM = 0x23F1D0C8A9B54E6F
DOMAIN_SPLIT = 0x5AC6E9D4F0327B8D


def mix64(value: int) -> int:
    """SplitMix64 finalizer; a fixed 64-bit bijective scramble."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


def derive_seed(seed: int, domain: int, key: str = "") -> int:
    """Per-(domain, key) sub-seed; stable across processes and languages."""
    return mix64((seed & MASK64) ^ domain ^ fnv1a64(key.encode("utf-8")))


class Rng:
    """SplitMix64 stream with the handful of draw shapes the pipeline needs."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n).  Plain modulo; the negligible bias is a
        deliberate trade for cross-language reproducibility."""
        if n <= 0:
            raise ValueError("below() requires n >= 1")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.below(hi - lo + 1)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def choice(self, seq):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
