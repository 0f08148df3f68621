from collections import Counter

from rehashmap.hashing import default_hasher, identity_hasher, mix64


def test_determinism():
    assert default_hasher(12345) == default_hasher(12345)
    assert default_hasher("spam") == default_hasher("spam")
    assert mix64(0) == 0
    assert 0 <= default_hasher(-1) < (1 << 64)


def test_identity_hasher_passes_low_bits_through():
    for key in (0, 1, 14, 511, (1 << 64) + 5):
        h = identity_hasher(key)
        for m in (1, 3, 15, 511):
            assert h & m == (key & ((1 << 64) - 1)) & m


def test_sequential_keys_spread_over_buckets():
    # 2^16 sequential keys into 2^10 buckets: the mixer must not let the
    # max chain blow past 8x the mean (a brute-force histogram check)
    buckets = 1 << 10
    n = 1 << 16
    counts = Counter(default_hasher(k) & (buckets - 1) for k in range(n))
    mean = n / buckets
    assert len(counts) == buckets
    assert max(counts.values()) <= 8 * mean


def test_mix64_is_a_bijection_on_low_bits_sample():
    # odd multiply is invertible mod 2^64; spot-check no collisions over
    # a contiguous range
    seen = {mix64(x) for x in range(1 << 14)}
    assert len(seen) == 1 << 14
