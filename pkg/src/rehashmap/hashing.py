"""Key hashing for power-of-two bucket masking.

The table takes the *low* bits of a hash, so the mixer has to spread
entropy downward. The default finalizer is one odd-constant multiply
followed by a high-bit xor-shift: multiplication by an odd constant is a
bijection modulo 2^64 (sequential keys stay collision-free), and the
xor-shift folds high bits into the low ones that the mask keeps.
"""

from __future__ import annotations

from rehashmap.geometry import MASK64

GOLDEN_GAMMA = 0x9E3779B97F4A7C15  # odd, from the 64-bit golden ratio


def mix64(x: int) -> int:
    """Bit-mixing finalizer: odd multiply, then fold high bits down."""
    x = (x * GOLDEN_GAMMA) & MASK64
    x ^= x >> 32
    return x


def default_hasher(key) -> int:
    """Hash an arbitrary key to a uniform 64-bit value.

    Integers hash by value so results do not depend on the process hash
    seed; other types go through built-in hash() first.
    """
    if isinstance(key, int):
        return mix64(key & MASK64)
    return mix64(hash(key) & MASK64)


def identity_hasher(key) -> int:
    """Test seam: bucket_index(h, m) == key & m exactly."""
    return key & MASK64
