"""Index arithmetic for a power-of-two bucket array that doubles in place.

Everything here is a pure function over 64-bit unsigned integers, safe to
call from any thread. A *mask* is always of all-ones form (capacity minus
one, capacity a power of two), so a hash maps to a bucket with a single
AND instead of a division. When the array doubles, existing buckets keep
their indices and every new bucket at index i is logically attached to the
bucket at i with its top bit cleared (its *parent*): any pair hashing to i
under the doubled mask hashed to the parent under the old one. Buckets 0
and 1 are roots and have no parent.

Physically the array is a sequence of *segments*: segment 0 holds buckets
0-1, segment k (k >= 1) holds buckets 2^k .. 2^(k+1)-1. Publishing one
segment therefore doubles capacity without moving existing buckets.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
WORD_BITS = 64


def floor_log2(x: int) -> int:
    """Index of the most significant set bit of x (x must be >= 1)."""
    if x < 1:
        raise ValueError("floor_log2 requires x >= 1")
    return x.bit_length() - 1


def is_mask(m: int) -> bool:
    """True if m is of all-ones form with capacity at least two."""
    return m >= 1 and (m & (m + 1)) == 0


def bucket_index(h: int, m: int) -> int:
    """Bucket index of hash h under mask m (capacity - 1)."""
    return h & m


def parent_index(i: int) -> int:
    """Index of the bucket that held i's pairs before i's level existed.

    Clears the most significant set bit of i. Buckets 0 and 1 are roots;
    asking for their parent is a caller bug, not a sentinel.
    """
    if i < 2:
        raise ValueError("buckets 0 and 1 are roots and have no parent")
    return i & ((1 << floor_log2(i)) - 1)


def segment_index_of(i: int) -> int:
    """Segment that holds bucket i: floor(log2(i | 1))."""
    return floor_log2(i | 1)


def segment_base(k: int) -> int:
    """First global bucket index of segment k (0 for k=0, else 2^k)."""
    return (1 << k) & ~1


def segment_size(k: int) -> int:
    """Number of buckets in segment k (2 for k=0, else 2^k)."""
    return 2 if k == 0 else 1 << k


def level_mask(i: int) -> int:
    """Smallest mask under which bucket i is addressable.

    Every pair legitimately stored in bucket i satisfies
    ``h & level_mask(i) == i``.
    """
    if i < 2:
        return 1
    return (1 << (floor_log2(i) + 1)) - 1


def next_child_mask(h: int, m: int) -> int:
    """Smallest mask m' > m under which h maps to a different bucket.

    Walks mask levels upward, skipping levels whose new capacity bit of h
    is zero (under those masks h stays in its old bucket), and stops as
    soon as the first set bit is included. Raises if h has no set bit
    above m, in which case no such mask exists; the walk is bounded by
    the 64-bit word width either way.
    """
    if h & ~m & MASK64 == 0:
        raise ValueError(
            "h has no set bit above the mask; no child bucket differs"
        )
    while (h & (m + 1)) == 0:
        m = ((m << 1) | 1) & MASK64
    return ((m << 1) | 1) & MASK64
