"""Deterministic pseudo-random number generation.

All randomness in the library (scene synthesis, label embeddings, parameter
initialization, batch shuffling) flows through :class:`XorShift64Star`, an
xorshift64* generator seeded through a SplitMix64 scrambler. The integer
arithmetic is masked to 64 bits explicitly, so identical seeds give identical
streams on every platform.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, index: int) -> int:
    """Derive the `index`-th child seed from a master seed (disjoint streams)."""
    state = (master & _MASK) ^ 0xA5A5A5A5A5A5A5A5
    out = 0
    for _ in range(index + 1):
        state, out = splitmix64(state)
    return out


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash, used to seed label embedding streams."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & _MASK
    return h


class XorShift64Star:
    """xorshift64* stream with uniform, integer, and Gaussian draws."""

    def __init__(self, seed: int):
        # SplitMix64 the seed so nearby seeds decorrelate; state must be nonzero.
        _, state = splitmix64(seed & _MASK)
        self._state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform float in [lo, hi) with 53 bits of resolution."""
        u = (self.next_u64() >> 11) * (2.0 ** -53)
        return lo + (hi - lo) * u

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK - (_MASK % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Gaussian draw via Box-Muller on two uniform variates."""
        u1 = max(self.uniform(), 2.0 ** -53)
        u2 = self.uniform()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return mean + std * z

    def uniforms(self, count: int, lo: float = 0.0, hi: float = 1.0) -> list[float]:
        return [self.uniform(lo, hi) for _ in range(count)]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
