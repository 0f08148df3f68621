"""Physical bucket storage: segments, markers, locks, and growth.

The bucket array is split into segments (see geometry): a fixed table of
64 slots, one per possible level, where slot k owns 2^k buckets (2 for
k=0). Growing the table never moves a bucket; it allocates the next
segment, marks every bucket in it "new", publishes the slot, and only
then publishes the doubled mask. Readers that saw the new mask are
therefore guaranteed to find the segment published, and the only buckets
that can ever be marked new are in segments added after creation.

To avoid allocating many tiny segments up front, creation builds one
contiguous block and routes the low slots at offsets inside it (the joint
initial allocation), with all those buckets born already rehashed.

Claiming the right to grow is a compare-and-swap on the slot status
(EMPTY -> CLAIMED); in this pure-Python implementation the CAS is a short
critical section under a dedicated lock. Only one growth can be in
flight: the next slot's claim needs an observed mask that is only
published by finishing the previous one.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional

from rehashmap.geometry import (
    floor_log2,
    segment_base,
    segment_index_of,
    segment_size,
)

SLOT_EMPTY = 0
SLOT_CLAIMED = 1
SLOT_PUBLISHED = 2

NUM_SLOTS = 64  # bit width of the size counter


class Bucket:
    """One slot: rehash marker, reader-writer exclusion, chain of pairs.

    The chain is a list of (key, hash, value) triples; mutation only under
    the write lock, reads under at least the read lock. The marker may be
    read without holding the lock (the race check relies on this), which
    is safe in CPython because attribute loads are atomic.

    The lock is a plain condition-variable reader-writer lock with no
    writer preference; fine for correctness work, not tuned for speed.
    """

    __slots__ = ("rehashed", "chain", "_cond", "_readers", "_writer")

    def __init__(self, rehashed: bool):
        self.rehashed = rehashed
        self.chain: list = []
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    def lock_read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1

    def unlock_read(self):
        with self._cond:
            self._readers -= 1
            if not self._readers:
                self._cond.notify_all()

    def lock_write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True

    def unlock_write(self):
        with self._cond:
            self._writer = False
            self._cond.notify_all()

    def unlock(self, write: bool):
        if write:
            self.unlock_write()
        else:
            self.unlock_read()


class SegmentSlot:
    """Status plus storage routing for one segment.

    ``buf`` is the list holding the segment's buckets and ``base`` the
    offset of the segment's first bucket inside it. Initial segments all
    alias the one joint block at their natural offsets; grown segments own
    their list with base 0. A CLAIMED slot is never dereferenced.
    """

    __slots__ = ("status", "buf", "base")

    def __init__(self):
        self.status = SLOT_EMPTY
        self.buf: Optional[list] = None
        self.base = 0


class AtomicCounter:
    """Fetch-and-add counter; += is not atomic across bytecodes."""

    __slots__ = ("_lock", "_value")

    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    def fetch_inc(self) -> int:
        with self._lock:
            v = self._value
            self._value = v + 1
            return v

    def fetch_dec(self) -> int:
        with self._lock:
            v = self._value
            self._value = v - 1
            return v

    def load(self) -> int:
        return self._value


class BucketStore:
    """Segment table, mask/size header, and the growth protocol.

    The mask attribute only ever grows and is always all-ones; a plain
    attribute read observes it atomically. (The distinct-cache-line
    placement of mask vs size is a physical-layout concern that only the
    compiled core can honor; object layout is not controllable here.)
    """

    def __init__(self, initial_buckets: int = 512,
                 bucket_factory: Callable[[bool], Bucket] = Bucket):
        if initial_buckets < 2 or initial_buckets & (initial_buckets - 1):
            raise ValueError("initial_buckets must be a power of two >= 2")
        self._bucket_factory = bucket_factory
        self._claim_lock = threading.Lock()
        self.slots = [SegmentSlot() for _ in range(NUM_SLOTS)]
        self.size = AtomicCounter()
        self.growths = 0
        self.stalled_growth = False

        # joint initial allocation: one contiguous block, low slots routed
        # to offsets inside it, every bucket born rehashed
        block = [bucket_factory(True) for _ in range(initial_buckets)]
        self.initial_level = floor_log2(initial_buckets)
        for k in range(self.initial_level):
            slot = self.slots[k]
            slot.buf = block
            slot.base = segment_base(k)
            slot.status = SLOT_PUBLISHED
        self.mask = initial_buckets - 1

    @property
    def capacity(self) -> int:
        return self.mask + 1

    def bucket_at(self, i: int) -> Bucket:
        """Bucket for global index i; i must be covered by an observed mask."""
        k = segment_index_of(i)
        slot = self.slots[k]
        if slot.status != SLOT_PUBLISHED:
            raise RuntimeError(f"bucket {i}: segment {k} not published")
        return slot.buf[slot.base + (i - segment_base(k))]

    def claim_growth(self, observed_mask: int) -> Optional[int]:
        """Try to win the right to add the segment after observed_mask.

        Returns the claimed segment index, or None if the slot was already
        claimed or published (someone else is growing, or already did).
        """
        k = segment_index_of(observed_mask + 1)
        slot = self.slots[k]
        if slot.status != SLOT_EMPTY:
            return None
        with self._claim_lock:
            if slot.status != SLOT_EMPTY:
                return None
            slot.status = SLOT_CLAIMED
        return k

    def allocate_and_publish(self, k: int):
        """Allocate segment k, mark its buckets new, publish slot then mask.

        Caller must hold the claim for k and no bucket lock. On allocation
        failure the slot stays CLAIMED and the table keeps serving at the
        old capacity; growth is permanently stalled and flagged.
        """
        slot = self.slots[k]
        if slot.status != SLOT_CLAIMED:
            raise RuntimeError(f"segment {k} not claimed by caller")
        try:
            buf = [self._bucket_factory(False) for _ in range(segment_size(k))]
        except MemoryError:
            self.stalled_growth = True
            return
        slot.buf = buf
        slot.base = 0
        slot.status = SLOT_PUBLISHED
        # mask is published last so any reader observing it finds the
        # segment present and its buckets marked new
        self.mask = (1 << (k + 1)) - 1
        self.growths += 1
