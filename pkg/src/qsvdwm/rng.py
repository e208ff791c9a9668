"""Portable integer-state generators.

Every stream is defined by 64-bit integer arithmetic only, so keyed block
orders and attack noise are identical on any platform:

* ``splitmix64``: ``z += 0x9E3779B97F4A7C15``; then
  ``z = (z ^ z>>30) * 0xBF58476D1CE4E5B9``, ``z = (z ^ z>>27) * 0x94D049BB133111EB``,
  ``z ^ z>>31``.  Used to seed and as a counter-based hash.
* ``xorshift64*``: ``x ^= x>>12; x ^= x<<25; x ^= x>>27``; output
  ``x * 0x2545F4914F6CDD1D``.  Drives the Fisher-Yates shuffle.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
XS_MULT = 0x2545F4914F6CDD1D


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix step: returns ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return state, z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* seeded through splitmix64 (never a zero state)."""

    def __init__(self, seed: int) -> None:
        if not 0 <= seed <= MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        _, s = splitmix64(seed)
        self.state = s or GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK
        x ^= x >> 27
        self.state = x
        return (x * XS_MULT) & MASK

    def below(self, n: int) -> int:
        """Unbiased integer in ``[0, n)`` by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = MASK - (MASK + 1) % n
        while True:
            r = self.next_u64()
            if r <= limit:
                return r % n


def permutation(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates permutation of ``range(n)``."""
    rng = XorShift64Star(seed)
    p = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        p[i], p[j] = p[j], p[i]
    return np.array(p, dtype=np.int64)


def hash_u64(seed: int, counters: np.ndarray) -> np.ndarray:
    """Counter-based stream: ``splitmix64`` output for state ``seed + counter*GOLDEN``.

    Vectorized over ``counters``; element ``c`` equals the ``c+1``-th output of a
    sequential splitmix64 generator started at ``seed``.
    """
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK) + (c + np.uint64(1)) * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniform01(seed: int, counters: np.ndarray) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of ``hash_u64``."""
    return (hash_u64(seed, counters) >> np.uint64(11)).astype(np.float64) * 2.0**-53
