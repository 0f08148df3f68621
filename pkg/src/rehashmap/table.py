"""Concurrent hash map that grows without a global lock.

Growth publishes a new segment of buckets (doubling capacity) and the new
mask, and stops there: no pair moves at growth time. Every new bucket
carries a "new" marker, and the first operation that touches it pulls the
pairs it owns out of its parent bucket (recursively, if the parent is
itself still new). Rehashing a bucket therefore only ever locks the bucket
and its parent, both at strictly decreasing indices, so no global lock or
lock-order cycle exists anywhere.

The price is one race: a lookup computes its bucket from a mask that may
be stale by the time the bucket is searched, so a miss may mean "the pair
was just moved to a child bucket". The miss path re-reads the mask; if it
changed the key's bucket AND the first child bucket the key would move to
is no longer marked new, the lookup restarts with the fresh mask.
Otherwise the miss is definitive: moving a pair out of the searched
bucket requires that bucket's write lock, which the searcher itself held,
and a still-new child has by definition received nothing.

Locking discipline: chain reads under at least the bucket's read lock,
mutation and rehashing under the write lock; a read-mode caller that
finds a new marker releases, reacquires in write mode, re-checks, and
keeps write mode afterwards. Values are handed to callers only through a
visitor invoked under the bucket lock; the visitor must not call back
into the table.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterator, Optional

from rehashmap.geometry import is_mask, level_mask, next_child_mask, parent_index
from rehashmap.hashing import default_hasher, identity_hasher
from rehashmap.storage import Bucket, BucketStore


class ConcurrentHashMap:
    """Growable chained hash map, safe for any number of threads.

    Keys may be any hashable objects (equal keys must hash equal under
    the supplied hasher). Duplicate inserts do not overwrite: the map has
    insert-if-absent semantics.

    Args:
        initial_buckets: starting capacity, power of two >= 2. Generous
            initial capacity keeps early growth contention away.
        hasher: key -> 64-bit int. Defaults to a mixing hasher; tests may
            inject ``identity_hasher`` to steer keys into known buckets.
        instrumented: keep restart/rehash counters. Disabling it does not
            change behavior, only the bookkeeping.
    """

    def __init__(self, initial_buckets: int = 512, *,
                 hasher: Optional[Callable] = None,
                 instrumented: bool = True):
        self._store = BucketStore(initial_buckets)
        self._hasher = hasher if hasher is not None else default_hasher
        self._instrumented = instrumented
        self._stats_lock = threading.Lock()
        self._restarts = 0
        self._rehashes = 0
        self._order_violations = 0

    # ------------------------------------------------------------------
    # public operations

    def insert(self, key, value) -> bool:
        """Add key -> value if absent. True if inserted, False if present."""
        h = self._hasher(key)
        bucket, write, idx, m, _, _ = self._locate(key, h, write=True)
        if idx is not None:
            bucket.unlock(write)
            return False
        # counter first, then the chain: the growth check below uses the
        # pre-increment count against the mask this operation observed
        sz = self._store.size.fetch_inc()
        bucket.chain.append((key, h, value))
        claimed = self._store.claim_growth(m) if sz >= m else None
        bucket.unlock(write)
        if claimed is not None:
            # the winner allocates outside any bucket lock
            self._store.allocate_and_publish(claimed)
        return True

    def find(self, key, visitor: Optional[Callable] = None) -> bool:
        """True if key is present; visitor(key, value) runs under the lock."""
        h = self._hasher(key)
        bucket, write, idx, _, _, _ = self._locate(key, h, write=False)
        try:
            if idx is None:
                return False
            if visitor is not None:
                found_key, _, value = bucket.chain[idx]
                visitor(found_key, value)
            return True
        finally:
            bucket.unlock(write)

    def erase(self, key) -> bool:
        """Remove key if present. True if removed."""
        h = self._hasher(key)
        bucket, write, idx, _, _, _ = self._locate(key, h, write=True)
        if idx is None:
            bucket.unlock(write)
            return False
        chain = bucket.chain
        last = chain.pop()
        if idx < len(chain):
            chain[idx] = last
        self._store.size.fetch_dec()
        bucket.unlock(write)
        return True

    def size(self) -> int:
        """Pair count: exact at quiescence, approximate under concurrency."""
        return self._store.size.load()

    def __len__(self) -> int:
        return self.size()

    def force_rehash_all(self):
        """Touch every bucket once so no deferred rehash work remains.

        Quiescent maintenance call: no concurrent growth may be in flight.
        Afterwards every pair sits in bucket ``hash & mask``.
        """
        for i in range(self._store.mask + 1):
            self.rehash_bucket_now(i)

    # ------------------------------------------------------------------
    # bulk conveniences (the compiled core exposes the same surface)

    def insert_many(self, keys, values=None) -> int:
        """Insert keys (paired with values, or key -> key). Returns #new."""
        ins = self.insert
        n = 0
        if values is None:
            for k in keys:
                n += ins(k, k)
        else:
            for k, v in zip(keys, values):
                n += ins(k, v)
        return n

    def count_hits(self, keys) -> int:
        fnd = self.find
        n = 0
        for k in keys:
            n += fnd(k)
        return n

    def erase_many(self, keys) -> int:
        ers = self.erase
        n = 0
        for k in keys:
            n += ers(k)
        return n

    # ------------------------------------------------------------------
    # introspection (quiescent unless noted)

    @property
    def mask(self) -> int:
        return self._store.mask

    @property
    def capacity(self) -> int:
        return self._store.mask + 1

    def hash_of(self, key) -> int:
        return self._hasher(key)

    def is_bucket_rehashed(self, i: int) -> bool:
        return self._store.bucket_at(i).rehashed

    def counter_values(self) -> tuple:
        """(restarts, rehashes, growths, stalled, lock_order_violations)."""
        return (
            self._restarts,
            self._rehashes,
            self._store.growths,
            int(self._store.stalled_growth),
            self._order_violations,
        )

    def census_counts(self, threshold: int = 4) -> tuple:
        """(total, rehashed, empty, overpopulated, max_chain, pairs)."""
        total = self._store.mask + 1
        rehashed = empty = overpop = max_chain = pairs = 0
        for i in range(total):
            b = self._store.bucket_at(i)
            n = len(b.chain)
            rehashed += b.rehashed
            empty += n == 0
            overpop += n > threshold
            if n > max_chain:
                max_chain = n
            pairs += n
        return total, rehashed, empty, overpop, max_chain, pairs

    def scan_buckets(self) -> Iterator[tuple]:
        """Yield (index, rehashed, [(key, value), ...]) for every bucket."""
        for i in range(self._store.mask + 1):
            b = self._store.bucket_at(i)
            yield i, b.rehashed, [(k, v) for (k, _h, v) in b.chain]

    def check_level_containment(self) -> int:
        """Count pairs violating hash & level_mask(bucket) == bucket."""
        bad = 0
        for i, _, items in self.scan_buckets():
            lm = level_mask(i)
            for key, _ in items:
                if self._hasher(key) & lm != i:
                    bad += 1
        return bad

    def check_full_placement(self) -> int:
        """Count pairs not in bucket hash & mask (0 after force_rehash_all)."""
        m = self._store.mask
        bad = 0
        for i, _, items in self.scan_buckets():
            for key, _ in items:
                if self._hasher(key) & m != i:
                    bad += 1
        return bad

    # ------------------------------------------------------------------
    # test seams: deterministic replay of growth/rehash interleavings

    def force_grow(self) -> int:
        """Publish the next segment unconditionally. Returns the new mask."""
        claimed = self._store.claim_growth(self._store.mask)
        if claimed is None:
            raise RuntimeError("growth already in flight")
        self._store.allocate_and_publish(claimed)
        return self._store.mask

    def rehash_bucket_now(self, i: int) -> bool:
        """Rehash bucket i if pending. True if this call did the work."""
        b = self._store.bucket_at(i)
        b.lock_write()
        was_new = not b.rehashed
        if was_new:
            self._rehash_bucket(b, i)
        b.unlock_write()
        return was_new

    def find_from_mask(self, key, start_mask: int) -> tuple:
        """Run a lookup as if it had read ``start_mask`` before a growth.

        Returns (found, restarts_taken, final_bucket_index).
        """
        h = self._hasher(key)
        bucket, write, idx, _, restarts, i = self._locate(
            key, h, write=False, start_mask=self._check_mask(start_mask))
        bucket.unlock(write)
        return idx is not None, restarts, i

    def erase_from_mask(self, key, start_mask: int) -> tuple:
        """Erase twin of find_from_mask, same return convention."""
        h = self._hasher(key)
        bucket, write, idx, _, restarts, i = self._locate(
            key, h, write=True, start_mask=self._check_mask(start_mask))
        if idx is None:
            bucket.unlock(write)
            return False, restarts, i
        chain = bucket.chain
        last = chain.pop()
        if idx < len(chain):
            chain[idx] = last
        self._store.size.fetch_dec()
        bucket.unlock(write)
        return True, restarts, i

    def _check_mask(self, m: int) -> int:
        if not is_mask(m) or m > self._store.mask:
            raise ValueError(f"not a valid historical mask: {m}")
        return m

    # ------------------------------------------------------------------
    # core protocol

    def _locate(self, key, h: int, write: bool, start_mask: int = None):
        """Lock the key's bucket and search it, restarting on a detected race.

        Returns (bucket, write_held, chain_index_or_None, mask_used,
        restarts_taken, bucket_index). The bucket comes back locked; the
        caller unlocks.
        """
        store = self._store
        m = store.mask if start_mask is None else start_mask
        restarts = 0
        while True:
            i = h & m
            bucket, held_write = self._acquire_bucket(i, write)
            idx = None
            for j, entry in enumerate(bucket.chain):
                if entry[1] == h and entry[0] == key:
                    idx = j
                    break
            if idx is not None:
                return bucket, held_write, idx, m, restarts, i
            m_now = store.mask
            if (h & m) != (h & m_now) and self._is_race(h, m):
                # the pair may have moved to a child bucket after we
                # computed i; start over with the fresh mask
                bucket.unlock(held_write)
                m = m_now
                restarts += 1
                if self._instrumented:
                    with self._stats_lock:
                        self._restarts += 1
                continue
            return bucket, held_write, None, m, restarts, i

    def _acquire_bucket(self, i: int, write: bool):
        """Lock bucket i, rehashing it first if it is still marked new.

        Read-mode callers observing a new marker upgrade by release and
        reacquire (then re-check: someone may have rehashed meanwhile) and
        keep the write lock. Returns (bucket, write_held).
        """
        b = self._store.bucket_at(i)
        if not write:
            b.lock_read()
            if b.rehashed:
                return b, False
            b.unlock_read()
        b.lock_write()
        if not b.rehashed:
            self._rehash_bucket(b, i)
        return b, True

    def _rehash_bucket(self, b_new: Bucket, i: int):
        """Pull bucket i's pairs out of its parent; caller holds i's write lock.

        The marker flips before any pair moves: a concurrent racer that
        still sees "new" can safely conclude nothing has left the parent
        toward this bucket. Pairs whose final home is a deeper child of i
        still move into i now; there is no partially rehashed state.
        """
        assert not b_new.chain, "new bucket received pairs before rehash"
        b_new.rehashed = True
        if self._instrumented:
            with self._stats_lock:
                self._rehashes += 1
        parent = parent_index(i)
        if parent >= i:  # lock order must strictly decrease
            with self._stats_lock:
                self._order_violations += 1
        b_old, _ = self._acquire_bucket(parent, write=True)
        full = level_mask(i)
        keep = []
        move = []
        for entry in b_old.chain:
            if entry[1] & full == i:
                move.append(entry)
            else:
                keep.append(entry)
        if move:
            b_old.chain = keep
            b_new.chain.extend(move)
        b_old.unlock_write()

    def _is_race(self, h: int, old_mask: int) -> bool:
        """Did a concurrent rehash possibly move h's pair out of its bucket?

        Checks the first child bucket the pair would migrate to. Not the
        bucket under the current mask: with multiple growths the pair may
        sit in an intermediate bucket between parent and final target.
        Marker read is lock-free.
        """
        child = h & next_child_mask(h, old_mask)
        return self._store.bucket_at(child).rehashed


class PyUInt64Map(ConcurrentHashMap):
    """Pure-Python stand-in for the compiled 64-bit-key core.

    Same constructor and method surface as ``_speedups.UInt64Map`` so the
    two are interchangeable; used when the extension is not built.
    """

    def __init__(self, initial_buckets: int = 512, *,
                 identity_hash: bool = False, instrumented: bool = True):
        super().__init__(
            initial_buckets,
            hasher=identity_hasher if identity_hash else default_hasher,
            instrumented=instrumented,
        )
