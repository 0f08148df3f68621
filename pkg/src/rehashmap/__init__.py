"""Concurrent growable hash map with per-bucket on-demand rehashing.

Two interchangeable implementations of the same algorithm ship here:

* ``ConcurrentHashMap``: pure Python, arbitrary hashable keys, pluggable
  hasher. The readable reference.
* ``UInt64Map``: keys and values restricted to unsigned 64-bit ints. If
  the compiled extension built, this is the Cython core, which runs its
  hot paths with the GIL released (real parallelism, bulk operations);
  otherwise it falls back to a pure-Python class with the identical
  surface. ``IMPLEMENTATION`` says which one import selected.
"""

from rehashmap.hashing import default_hasher, identity_hasher, mix64
from rehashmap.instrumentation import CensusReport, Counters, census, snapshot_counters
from rehashmap.table import ConcurrentHashMap, PyUInt64Map

try:
    from rehashmap import _speedups
except ImportError:  # extension not built; the pure fallback takes over
    _speedups = None

HAVE_SPEEDUPS = _speedups is not None
IMPLEMENTATION = "compiled" if HAVE_SPEEDUPS else "pure"

if HAVE_SPEEDUPS:
    UInt64Map = _speedups.UInt64Map
else:
    UInt64Map = PyUInt64Map


def make_table(initial_buckets: int = 512, *, impl: str = "auto",
               identity_hash: bool = False, instrumented: bool = True):
    """Build a 64-bit-key table, choosing the implementation explicitly.

    impl: "auto" (whatever import selected), "pure", or "compiled"
    (raises if the extension is unavailable).
    """
    if impl == "auto":
        cls = UInt64Map
    elif impl == "pure":
        cls = PyUInt64Map
    elif impl == "compiled":
        if not HAVE_SPEEDUPS:
            raise RuntimeError("compiled core requested but not built")
        cls = _speedups.UInt64Map
    else:
        raise ValueError(f"unknown impl {impl!r}")
    return cls(initial_buckets, identity_hash=identity_hash,
               instrumented=instrumented)


__all__ = [
    "ConcurrentHashMap",
    "PyUInt64Map",
    "UInt64Map",
    "make_table",
    "HAVE_SPEEDUPS",
    "IMPLEMENTATION",
    "census",
    "snapshot_counters",
    "Counters",
    "CensusReport",
    "default_hasher",
    "identity_hasher",
    "mix64",
]
