"""
Portable PRNGs for stimulus generation.

xoshiro256** seeded through splitmix64, as published by Blackman and Vigna,
so stimulus columns can be reproduced bit-for-bit in any language.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


class Xoshiro256StarStar:
    def __init__(self, state):
        state = [int(s) & MASK64 for s in state]
        if len(state) != 4:
            raise ValueError("xoshiro256** needs four 64-bit state words")
        if not any(state):
            raise ValueError("xoshiro256** state must not be all zero")
        self.s = state

    @classmethod
    def from_seed(cls, seed: int) -> "Xoshiro256StarStar":
        sm = SplitMix64(seed)
        return cls([sm.next() for _ in range(4)])

    def next(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def bits(self, width: int) -> int:
        """Top `width` bits of the next output (1 <= width <= 64)."""
        if not 1 <= width <= 64:
            raise ValueError(f"width must be in 1..64, got {width}")
        return self.next() >> (64 - width)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def column_stream(seed: int, name: str) -> Xoshiro256StarStar:
    """Generator for one port's column, keyed by (seed, port name)."""
    return Xoshiro256StarStar.from_seed((seed ^ fnv1a64(name.encode("utf-8"))) & MASK64)
