"""Uniqueness-controlled benchmark workloads.

A workload is an array of 64-bit keys with a controlled proportion of
distinct values: at uniqueness p%, the array holds round-half-up of
unique_keys * 100 / p entries, every one of the unique_keys distinct
values appears at least once, and the rest are uniform repeats, all
shuffled together. The array length scales inversely with the rate so
the number of unique keys (and the final table) stays constant across
rates; at 5% each value repeats 20 times on average, meaning 5% of
operations are true insertions and the rest are effectively lookups.

Generation is deterministic per seed. The generator is xorshift64*
(Marsaglia): three xorshifts (12 right, 25 left, 27 right) on the state,
output = state * 0x2545F4914F6CDD1D mod 2^64. A zero seed is remapped to
a fixed odd constant since the all-zero state is a fixed point. The
compiled extension accelerates the repeat-fill and the Fisher-Yates
shuffle with the identical algorithm; outputs are bit-for-bit equal.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from rehashmap.geometry import MASK64

try:
    from rehashmap import _speedups
except ImportError:
    _speedups = None

_XS_MULT = 0x2545F4914F6CDD1D
_ZERO_SEED_STATE = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class WorkloadSpec:
    unique_keys: int
    unique_pct: int = 100
    seed: int = 42
    threads: int = 1
    initial_buckets: int = 512

    @property
    def array_length(self) -> int:
        q, r = divmod(self.unique_keys * 100, self.unique_pct)
        return q + (1 if 2 * r >= self.unique_pct else 0)


class XorShift64Star:
    """Seeded 64-bit PRNG; the reference for the compiled twin."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = (seed & MASK64) or _ZERO_SEED_STATE

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XS_MULT) & MASK64

    def randrange(self, n: int) -> int:
        """Unbiased value in [0, n) by rejection below 2^64 mod n."""
        lim = (1 << 64) % n
        r = self.next_u64()
        while r < lim:
            r = self.next_u64()
        return r % n

    def shuffle(self, arr) -> None:
        for j in range(len(arr) - 1, 0, -1):
            r = self.randrange(j + 1)
            arr[j], arr[r] = arr[r], arr[j]


def generate_workload(spec: WorkloadSpec, use_speedups: bool | None = None) -> array:
    """Build the key array for a spec. Deterministic for a fixed seed."""
    if spec.unique_keys <= 0:
        raise ValueError("unique_keys must be positive")
    if not 1 <= spec.unique_pct <= 100:
        raise ValueError("unique_pct must be in 1..100")
    if use_speedups is None:
        use_speedups = _speedups is not None

    u = spec.unique_keys
    length = spec.array_length
    rng = XorShift64Star(spec.seed)

    # distinct values first (collisions in 64 bits are once-in-a-blue-moon,
    # but dedupe keeps the array exactly u-distinct either way)
    seen = set()
    uniques = []
    while len(uniques) < u:
        v = rng.next_u64()
        if v in seen:
            continue
        seen.add(v)
        uniques.append(v)

    arr = array("Q", uniques)
    arr.frombytes(bytes(8 * (length - u)))

    if use_speedups and _speedups is not None:
        state = _speedups.workload_fill_tail(rng.state, arr, u)
        rng.state = _speedups.workload_shuffle(state, arr)
    else:
        for j in range(u, length):
            arr[j] = arr[rng.randrange(u)]
        rng.shuffle(arr)
    return arr
