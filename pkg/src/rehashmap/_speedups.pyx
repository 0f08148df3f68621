# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled core: the same concurrent table, specialized to uint64 keys.

Mirror of rehashmap.table for 64-bit integer keys and values. All hot
paths run with the GIL released: per-bucket spin reader-writer locks,
atomic mask/size/marker access via GCC __atomic builtins, and chain nodes
relinked (never copied) during rehash. Bulk operations (insert_many,
count_hits, erase_many) stay in C for a whole chunk of keys, which is
what lets multiple Python threads actually run in parallel.

Semantics, counters, and test seams match the pure class one for one;
tests assert the equivalence.
"""

from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cdef extern from *:
    """
    #include <stdint.h>
    #include <stdlib.h>
    #include <sched.h>

    typedef struct chain_node {
        uint64_t key;
        uint64_t value;
        struct chain_node *next;
    } chain_node;

    typedef struct bucket_t {
        int32_t lock;          /* 0 free, -1 writer, >0 reader count */
        uint8_t rehashed;
        chain_node *head;
    } bucket_t;

    typedef struct seg_slot {
        uint8_t status;        /* 0 empty, 1 claimed, 2 published */
        bucket_t *buf;
    } seg_slot;

    typedef struct ctable {
        uint64_t mask;                  /* own cache line: hot atomic */
        char pad0[56];
        int64_t size;                   /* own cache line: hot atomic */
        char pad1[56];
        int64_t restarts;
        int64_t rehashes;
        int64_t growths;
        int64_t order_violations;
        uint8_t stalled;
        uint8_t instrumented;
        uint8_t identity;
        int init_levels;
        bucket_t *block;
        seg_slot slots[64];
    } ctable;

    #define RH_SLOT_EMPTY 0
    #define RH_SLOT_CLAIMED 1
    #define RH_SLOT_PUBLISHED 2

    static inline void rh_pause(void) {
    #if defined(__x86_64__) || defined(__i386__)
        __builtin_ia32_pause();
    #endif
    }

    static inline void rw_lock_read(bucket_t *b) {
        int spins = 0;
        for (;;) {
            int32_t c = __atomic_load_n(&b->lock, __ATOMIC_RELAXED);
            if (c >= 0 && __atomic_compare_exchange_n(
                    &b->lock, &c, c + 1, 1,
                    __ATOMIC_ACQUIRE, __ATOMIC_RELAXED))
                return;
            rh_pause();
            if (++spins > 512) { sched_yield(); spins = 0; }
        }
    }

    static inline void rw_unlock_read(bucket_t *b) {
        __atomic_fetch_sub(&b->lock, 1, __ATOMIC_RELEASE);
    }

    static inline void rw_lock_write(bucket_t *b) {
        int spins = 0;
        for (;;) {
            int32_t c = 0;
            if (__atomic_compare_exchange_n(
                    &b->lock, &c, -1, 1,
                    __ATOMIC_ACQUIRE, __ATOMIC_RELAXED))
                return;
            rh_pause();
            if (++spins > 512) { sched_yield(); spins = 0; }
        }
    }

    static inline void rw_unlock_write(bucket_t *b) {
        __atomic_store_n(&b->lock, 0, __ATOMIC_RELEASE);
    }

    static inline void rw_unlock_mode(bucket_t *b, int write_held) {
        if (write_held) rw_unlock_write(b); else rw_unlock_read(b);
    }

    static inline uint64_t mask_load(const ctable *t) {
        return __atomic_load_n(&((ctable *)t)->mask, __ATOMIC_ACQUIRE);
    }

    static inline void mask_store(ctable *t, uint64_t v) {
        __atomic_store_n(&t->mask, v, __ATOMIC_RELEASE);
    }

    static inline int64_t ctr_fetch_add(int64_t *p, int64_t d) {
        return __atomic_fetch_add(p, d, __ATOMIC_RELAXED);
    }

    static inline int64_t ctr_load(const int64_t *p) {
        return __atomic_load_n(p, __ATOMIC_RELAXED);
    }

    static inline uint8_t marker_load(const bucket_t *b) {
        return __atomic_load_n(&((bucket_t *)b)->rehashed, __ATOMIC_ACQUIRE);
    }

    static inline void marker_store(bucket_t *b, uint8_t v) {
        __atomic_store_n(&b->rehashed, v, __ATOMIC_RELEASE);
    }

    static inline uint8_t slot_status_load(const seg_slot *s) {
        return __atomic_load_n(&((seg_slot *)s)->status, __ATOMIC_ACQUIRE);
    }

    static inline int slot_claim(seg_slot *s) {
        uint8_t expected = RH_SLOT_EMPTY;
        return __atomic_compare_exchange_n(
            &s->status, &expected, RH_SLOT_CLAIMED, 0,
            __ATOMIC_ACQ_REL, __ATOMIC_ACQUIRE);
    }

    static inline void slot_publish(seg_slot *s, bucket_t *buf) {
        __atomic_store_n(&s->buf, buf, __ATOMIC_RELEASE);
        __atomic_store_n(&s->status, RH_SLOT_PUBLISHED, __ATOMIC_RELEASE);
    }

    static inline int c_floor_log2(uint64_t x) {
        return 63 - __builtin_clzll(x);
    }

    static inline uint64_t c_mix64(uint64_t x) {
        x *= 0x9E3779B97F4A7C15ULL;
        x ^= x >> 32;
        return x;
    }
    """
    ctypedef struct chain_node:
        uint64_t key
        uint64_t value
        chain_node *next
    ctypedef struct bucket_t:
        int32_t lock
        uint8_t rehashed
        chain_node *head
    ctypedef struct seg_slot:
        uint8_t status
        bucket_t *buf
    ctypedef struct ctable:
        uint64_t mask
        int64_t size
        int64_t restarts
        int64_t rehashes
        int64_t growths
        int64_t order_violations
        uint8_t stalled
        uint8_t instrumented
        uint8_t identity
        int init_levels
        bucket_t *block
        seg_slot slots[64]
    int RH_SLOT_EMPTY
    int RH_SLOT_CLAIMED
    int RH_SLOT_PUBLISHED
    void rw_lock_read(bucket_t *b) nogil
    void rw_unlock_read(bucket_t *b) nogil
    void rw_lock_write(bucket_t *b) nogil
    void rw_unlock_write(bucket_t *b) nogil
    void rw_unlock_mode(bucket_t *b, int write_held) nogil
    uint64_t mask_load(const ctable *t) nogil
    void mask_store(ctable *t, uint64_t v) nogil
    int64_t ctr_fetch_add(int64_t *p, int64_t d) nogil
    int64_t ctr_load(const int64_t *p) nogil
    uint8_t marker_load(const bucket_t *b) nogil
    void marker_store(bucket_t *b, uint8_t v) nogil
    uint8_t slot_status_load(const seg_slot *s) nogil
    int slot_claim(seg_slot *s) nogil
    void slot_publish(seg_slot *s, bucket_t *buf) nogil
    int c_floor_log2(uint64_t x) nogil
    uint64_t c_mix64(uint64_t x) nogil

from libc.stdlib cimport calloc, free, malloc


# ----------------------------------------------------------------------
# index arithmetic (twins of rehashmap.geometry, for nogil use)

cdef inline uint64_t c_parent_index(uint64_t i) noexcept nogil:
    return i & ((<uint64_t>1 << c_floor_log2(i)) - 1)

cdef inline int c_segment_index_of(uint64_t i) noexcept nogil:
    return c_floor_log2(i | 1)

cdef inline uint64_t c_segment_base(int k) noexcept nogil:
    return (<uint64_t>1 << k) & ~<uint64_t>1

cdef inline uint64_t c_segment_size(int k) noexcept nogil:
    return 2 if k == 0 else <uint64_t>1 << k

cdef inline uint64_t c_level_mask(uint64_t i) noexcept nogil:
    if i < 2:
        return 1
    return (<uint64_t>2 << c_floor_log2(i)) - 1

cdef inline uint64_t c_next_child_mask(uint64_t h, uint64_t m) noexcept nogil:
    # caller guarantees h has a set bit above m, so the walk terminates
    while (h & (m + 1)) == 0:
        m = (m << 1) | 1
    return (m << 1) | 1

cdef inline uint64_t c_hash(const ctable *t, uint64_t key) noexcept nogil:
    return key if t.identity else c_mix64(key)


# ----------------------------------------------------------------------
# table internals, all nogil

cdef inline bucket_t *c_bucket_at(ctable *t, uint64_t i) noexcept nogil:
    cdef int k = c_segment_index_of(i)
    return t.slots[k].buf + (i - c_segment_base(k))

cdef void c_rehash_bucket(ctable *t, bucket_t *b_new, uint64_t i) noexcept nogil:
    """Pull i's pairs from the parent. Caller holds i's write lock."""
    cdef uint64_t parent, full, h
    cdef bucket_t *b_old
    cdef chain_node **cur
    cdef chain_node *n
    marker_store(b_new, 1)  # marker flips before any pair moves
    if t.instrumented:
        ctr_fetch_add(&t.rehashes, 1)
    parent = c_parent_index(i)
    if parent >= i:
        ctr_fetch_add(&t.order_violations, 1)
    b_old = c_bucket_at(t, parent)
    rw_lock_write(b_old)
    if not marker_load(b_old):
        c_rehash_bucket(t, b_old, parent)
    full = c_level_mask(i)
    cur = &b_old.head
    while cur[0] != NULL:
        n = cur[0]
        h = c_hash(t, n.key)
        if (h & full) == i:
            cur[0] = n.next
            n.next = b_new.head
            b_new.head = n
        else:
            cur = &n.next
    rw_unlock_write(b_old)

cdef bucket_t *c_acquire_bucket(ctable *t, uint64_t i, int want_write,
                                int *write_held) noexcept nogil:
    """Lock bucket i, rehashing on demand; read callers upgrade if needed."""
    cdef bucket_t *b = c_bucket_at(t, i)
    if not want_write:
        rw_lock_read(b)
        if marker_load(b):
            write_held[0] = 0
            return b
        rw_unlock_read(b)
    rw_lock_write(b)
    if not marker_load(b):  # re-check: someone may have beaten us to it
        c_rehash_bucket(t, b, i)
    write_held[0] = 1
    return b

cdef inline int c_is_race(ctable *t, uint64_t h, uint64_t m) noexcept nogil:
    """True if the first child h would migrate to was (or is) rehashed."""
    cdef uint64_t child = h & c_next_child_mask(h, m)
    return marker_load(c_bucket_at(t, child)) != 0

cdef inline chain_node *c_chain_find(bucket_t *b, uint64_t key) noexcept nogil:
    cdef chain_node *n = b.head
    while n != NULL:
        if n.key == key:
            return n
        n = n.next
    return NULL

ctypedef struct lookup_out:
    bucket_t *b
    chain_node *node
    uint64_t m_used
    uint64_t index
    int write_held
    int restarts

cdef void c_lookup_locked(ctable *t, uint64_t key, uint64_t h,
                          int want_write, uint64_t m,
                          lookup_out *out) noexcept nogil:
    """Lock the key's bucket and search, restarting on a detected race."""
    cdef uint64_t i, m_now
    cdef bucket_t *b
    cdef chain_node *node
    cdef int write_held = 0
    out.restarts = 0
    while True:
        i = h & m
        b = c_acquire_bucket(t, i, want_write, &write_held)
        node = c_chain_find(b, key)
        if node != NULL:
            break
        m_now = mask_load(t)
        if (h & m) != (h & m_now) and c_is_race(t, h, m):
            rw_unlock_mode(b, write_held)
            m = m_now
            out.restarts += 1
            if t.instrumented:
                ctr_fetch_add(&t.restarts, 1)
            continue
        break
    out.b = b
    out.node = node
    out.m_used = m
    out.index = i
    out.write_held = write_held

cdef inline int c_claim_growth(ctable *t, uint64_t observed_mask) noexcept nogil:
    cdef int k = c_segment_index_of(observed_mask + 1)
    if slot_status_load(&t.slots[k]) != RH_SLOT_EMPTY:
        return 0
    return k if slot_claim(&t.slots[k]) else 0

cdef void c_allocate_and_publish(ctable *t, int k) noexcept nogil:
    """Buckets born new, slot published, then the mask; in that order."""
    cdef uint64_t n = c_segment_size(k)
    cdef bucket_t *buf = <bucket_t *>calloc(n, sizeof(bucket_t))
    if buf == NULL:
        t.stalled = 1  # slot stays claimed; table keeps serving, crowded
        return
    slot_publish(&t.slots[k], buf)
    mask_store(t, (<uint64_t>2 << k) - 1)
    ctr_fetch_add(&t.growths, 1)

cdef int c_insert(ctable *t, uint64_t key, uint64_t value) noexcept nogil:
    """1 inserted, 0 already present, -1 allocation failure."""
    cdef uint64_t h = c_hash(t, key)
    cdef lookup_out out
    cdef chain_node *n
    cdef int64_t sz
    cdef int grow_k = 0
    c_lookup_locked(t, key, h, 1, mask_load(t), &out)
    if out.node != NULL:
        rw_unlock_write(out.b)
        return 0
    sz = ctr_fetch_add(&t.size, 1)
    n = <chain_node *>malloc(sizeof(chain_node))
    if n == NULL:
        ctr_fetch_add(&t.size, -1)
        rw_unlock_write(out.b)
        return -1
    n.key = key
    n.value = value
    n.next = out.b.head
    out.b.head = n
    if sz >= <int64_t>out.m_used:
        grow_k = c_claim_growth(t, out.m_used)
    rw_unlock_write(out.b)
    if grow_k:
        c_allocate_and_publish(t, grow_k)
    return 1

cdef int c_find(ctable *t, uint64_t key, uint64_t *value_out) noexcept nogil:
    cdef uint64_t h = c_hash(t, key)
    cdef lookup_out out
    c_lookup_locked(t, key, h, 0, mask_load(t), &out)
    if out.node == NULL:
        rw_unlock_mode(out.b, out.write_held)
        return 0
    value_out[0] = out.node.value
    rw_unlock_mode(out.b, out.write_held)
    return 1

cdef int c_erase(ctable *t, uint64_t key) noexcept nogil:
    cdef uint64_t h = c_hash(t, key)
    cdef lookup_out out
    cdef chain_node **cur
    cdef chain_node *n
    c_lookup_locked(t, key, h, 1, mask_load(t), &out)
    if out.node == NULL:
        rw_unlock_write(out.b)
        return 0
    cur = &out.b.head
    while cur[0] != NULL:
        n = cur[0]
        if n.key == key:
            cur[0] = n.next
            free(n)
            break
        cur = &n.next
    ctr_fetch_add(&t.size, -1)
    rw_unlock_write(out.b)
    return 1


# ----------------------------------------------------------------------
# lifecycle

cdef ctable *table_new(uint64_t initial_buckets, int identity,
                       int instrumented) noexcept:
    cdef ctable *t = <ctable *>calloc(1, sizeof(ctable))
    cdef uint64_t j
    cdef int k
    if t == NULL:
        return NULL
    t.block = <bucket_t *>calloc(initial_buckets, sizeof(bucket_t))
    if t.block == NULL:
        free(t)
        return NULL
    for j in range(initial_buckets):
        t.block[j].rehashed = 1
    t.init_levels = c_floor_log2(initial_buckets)
    for k in range(t.init_levels):
        t.slots[k].buf = t.block + c_segment_base(k)
        t.slots[k].status = RH_SLOT_PUBLISHED
    t.mask = initial_buckets - 1
    t.identity = identity
    t.instrumented = instrumented
    return t

cdef void table_free(ctable *t) noexcept:
    cdef int k
    cdef uint64_t j, n
    cdef chain_node *node
    cdef chain_node *nxt
    for k in range(64):
        if t.slots[k].status != RH_SLOT_PUBLISHED:
            continue
        n = c_segment_size(k)
        for j in range(n):
            node = t.slots[k].buf[j].head
            while node != NULL:
                nxt = node.next
                free(node)
                node = nxt
        if k >= t.init_levels:
            free(t.slots[k].buf)
    free(t.block)
    free(t)


# ----------------------------------------------------------------------
# Python surface

cdef class UInt64Map:
    """Concurrent uint64 -> uint64 map; compiled twin of the pure class."""

    cdef ctable *_t

    def __cinit__(self, initial_buckets=512, *, bint identity_hash=False,
                  bint instrumented=True):
        cdef uint64_t n = initial_buckets
        if n < 2 or n & (n - 1):
            raise ValueError("initial_buckets must be a power of two >= 2")
        self._t = table_new(n, identity_hash, instrumented)
        if self._t == NULL:
            raise MemoryError

    def __dealloc__(self):
        if self._t != NULL:
            table_free(self._t)
            self._t = NULL

    # -- core operations ------------------------------------------------

    def insert(self, key, value) -> bool:
        cdef uint64_t k = key, v = value
        cdef int r
        with nogil:
            r = c_insert(self._t, k, v)
        if r < 0:
            raise MemoryError
        return r == 1

    def find(self, key, visitor=None) -> bool:
        cdef uint64_t k = key, v = 0
        cdef uint64_t h
        cdef lookup_out out
        cdef int r
        if visitor is None:
            with nogil:
                r = c_find(self._t, k, &v)
            return r == 1
        # visitor path: keep the bucket lock across the callback
        h = c_hash(self._t, k)
        with nogil:
            c_lookup_locked(self._t, k, h, 0, mask_load(self._t), &out)
        if out.node == NULL:
            with nogil:
                rw_unlock_mode(out.b, out.write_held)
            return False
        try:
            visitor(out.node.key, out.node.value)
        finally:
            with nogil:
                rw_unlock_mode(out.b, out.write_held)
        return True

    def erase(self, key) -> bool:
        cdef uint64_t k = key
        cdef int r
        with nogil:
            r = c_erase(self._t, k)
        return r == 1

    def size(self):
        return ctr_load(&self._t.size)

    def __len__(self):
        return ctr_load(&self._t.size)

    def force_rehash_all(self):
        cdef uint64_t i, m = mask_load(self._t)
        cdef bucket_t *b
        with nogil:
            for i in range(m + 1):
                b = c_bucket_at(self._t, i)
                rw_lock_write(b)
                if not marker_load(b):
                    c_rehash_bucket(self._t, b, i)
                rw_unlock_write(b)

    # -- bulk operations (one GIL release per chunk) ----------------------

    def insert_many(self, keys, values=None):
        """Insert a buffer of keys (values defaults to the keys). #new."""
        cdef const uint64_t[::1] kv = keys
        cdef const uint64_t[::1] vv
        cdef Py_ssize_t n = kv.shape[0], j
        cdef int64_t inserted = 0
        cdef int r = 0
        if values is None:
            with nogil:
                for j in range(n):
                    r = c_insert(self._t, kv[j], kv[j])
                    if r < 0:
                        break
                    inserted += r
        else:
            vv = values
            if vv.shape[0] != n:
                raise ValueError("values length must match keys")
            with nogil:
                for j in range(n):
                    r = c_insert(self._t, kv[j], vv[j])
                    if r < 0:
                        break
                    inserted += r
        if r < 0:
            raise MemoryError
        return inserted

    def count_hits(self, keys):
        cdef const uint64_t[::1] kv = keys
        cdef Py_ssize_t n = kv.shape[0], j
        cdef int64_t hits = 0
        cdef uint64_t v = 0
        with nogil:
            for j in range(n):
                hits += c_find(self._t, kv[j], &v)
        return hits

    def erase_many(self, keys):
        cdef const uint64_t[::1] kv = keys
        cdef Py_ssize_t n = kv.shape[0], j
        cdef int64_t removed = 0
        with nogil:
            for j in range(n):
                removed += c_erase(self._t, kv[j])
        return removed

    # -- introspection ----------------------------------------------------

    @property
    def mask(self):
        return mask_load(self._t)

    @property
    def capacity(self):
        return mask_load(self._t) + 1

    def hash_of(self, key):
        cdef uint64_t k = key
        return c_hash(self._t, k)

    def is_bucket_rehashed(self, i):
        cdef uint64_t idx = i
        if idx > mask_load(self._t):
            raise ValueError("index beyond current mask")
        return marker_load(c_bucket_at(self._t, idx)) != 0

    def counter_values(self):
        """(restarts, rehashes, growths, stalled, lock_order_violations)."""
        return (
            ctr_load(&self._t.restarts),
            ctr_load(&self._t.rehashes),
            ctr_load(&self._t.growths),
            <int>self._t.stalled,
            ctr_load(&self._t.order_violations),
        )

    def census_counts(self, threshold=4):
        """(total, rehashed, empty, overpopulated, max_chain, pairs)."""
        cdef uint64_t i, m = mask_load(self._t)
        cdef int64_t thr = threshold
        cdef int64_t rehashed = 0, empty = 0, overpop = 0
        cdef int64_t max_chain = 0, pairs = 0, n
        cdef bucket_t *b
        cdef chain_node *node
        with nogil:
            for i in range(m + 1):
                b = c_bucket_at(self._t, i)
                n = 0
                node = b.head
                while node != NULL:
                    n += 1
                    node = node.next
                rehashed += marker_load(b) != 0
                empty += n == 0
                overpop += n > thr
                if n > max_chain:
                    max_chain = n
                pairs += n
        return (m + 1, rehashed, empty, overpop, max_chain, pairs)

    def scan_buckets(self):
        """[(index, rehashed, [(key, value), ...]), ...]; quiescent only."""
        cdef uint64_t i, m = mask_load(self._t)
        cdef bucket_t *b
        cdef chain_node *node
        result = []
        for i in range(m + 1):
            b = c_bucket_at(self._t, i)
            items = []
            node = b.head
            while node != NULL:
                items.append((node.key, node.value))
                node = node.next
            result.append((i, marker_load(b) != 0, items))
        return result

    def check_level_containment(self):
        cdef uint64_t i, m = mask_load(self._t), lm
        cdef int64_t bad = 0
        cdef bucket_t *b
        cdef chain_node *node
        with nogil:
            for i in range(m + 1):
                b = c_bucket_at(self._t, i)
                lm = c_level_mask(i)
                node = b.head
                while node != NULL:
                    if (c_hash(self._t, node.key) & lm) != i:
                        bad += 1
                    node = node.next
        return bad

    def check_full_placement(self):
        cdef uint64_t i, m = mask_load(self._t)
        cdef int64_t bad = 0
        cdef bucket_t *b
        cdef chain_node *node
        with nogil:
            for i in range(m + 1):
                b = c_bucket_at(self._t, i)
                node = b.head
                while node != NULL:
                    if (c_hash(self._t, node.key) & m) != i:
                        bad += 1
                    node = node.next
        return bad

    # -- test seams -------------------------------------------------------

    def force_grow(self):
        cdef uint64_t m = mask_load(self._t)
        cdef int k = c_claim_growth(self._t, m)
        if k == 0:
            raise RuntimeError("growth already in flight")
        with nogil:
            c_allocate_and_publish(self._t, k)
        return mask_load(self._t)

    def rehash_bucket_now(self, i):
        cdef uint64_t idx = i
        cdef bucket_t *b
        cdef bint was_new
        if idx > mask_load(self._t):
            raise ValueError("index beyond current mask")
        with nogil:
            b = c_bucket_at(self._t, idx)
            rw_lock_write(b)
            was_new = not marker_load(b)
            if was_new:
                c_rehash_bucket(self._t, b, idx)
            rw_unlock_write(b)
        return was_new

    def find_from_mask(self, key, start_mask):
        """Lookup as if start_mask had been read before a growth."""
        cdef uint64_t k = key, m = self._check_mask(start_mask)
        cdef uint64_t h = c_hash(self._t, k)
        cdef lookup_out out
        with nogil:
            c_lookup_locked(self._t, k, h, 0, m, &out)
            rw_unlock_mode(out.b, out.write_held)
        return out.node != NULL, out.restarts, out.index

    def erase_from_mask(self, key, start_mask):
        cdef uint64_t k = key, m = self._check_mask(start_mask)
        cdef uint64_t h = c_hash(self._t, k)
        cdef lookup_out out
        cdef chain_node **cur
        cdef chain_node *n
        cdef bint removed = False
        with nogil:
            c_lookup_locked(self._t, k, h, 1, m, &out)
            if out.node != NULL:
                cur = &out.b.head
                while cur[0] != NULL:
                    n = cur[0]
                    if n.key == k:
                        cur[0] = n.next
                        free(n)
                        break
                    cur = &n.next
                ctr_fetch_add(&self._t.size, -1)
                removed = True
            rw_unlock_write(out.b)
        return removed, out.restarts, out.index

    def _check_mask(self, m):
        cdef uint64_t mm = m
        if mm < 1 or mm & (mm + 1) or mm > mask_load(self._t):
            raise ValueError(f"not a valid historical mask: {m}")
        return mm


# ----------------------------------------------------------------------
# geometry twins, exposed for equivalence tests against the pure module

def bucket_index(h, m):
    return <uint64_t>h & <uint64_t>m

def parent_index(i):
    cdef uint64_t idx = i
    if idx < 2:
        raise ValueError("buckets 0 and 1 are roots and have no parent")
    return c_parent_index(idx)

def segment_index_of(i):
    return c_segment_index_of(<uint64_t>i)

def segment_base(k):
    return c_segment_base(<int>k)

def segment_size(k):
    return c_segment_size(<int>k)

def level_mask(i):
    return c_level_mask(<uint64_t>i)

def next_child_mask(h, m):
    cdef uint64_t hh = h, mm = m
    if hh & ~mm == 0:
        raise ValueError("h has no set bit above the mask")
    return c_next_child_mask(hh, mm)

def mix64(x):
    return c_mix64(<uint64_t>x)


# ----------------------------------------------------------------------
# workload generation accelerators (bit-identical to the pure PRNG path)

cdef inline uint64_t xs64_next(uint64_t *s) noexcept nogil:
    cdef uint64_t x = s[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    s[0] = x
    return x * <uint64_t>0x2545F4914F6CDD1D

cdef inline uint64_t xs64_below(uint64_t *s, uint64_t n) noexcept nogil:
    # rejection sampling below the largest multiple of n
    cdef uint64_t lim = (<uint64_t>0xFFFFFFFFFFFFFFFF % n + 1) % n
    cdef uint64_t r = xs64_next(s)
    while r < lim:
        r = xs64_next(s)
    return r % n

def workload_fill_tail(state, arr, uniques):
    """arr[uniques:] = random choices among arr[:uniques]. New PRNG state."""
    cdef uint64_t[::1] a = arr
    cdef uint64_t s = state, u = uniques
    cdef Py_ssize_t j, n = a.shape[0]
    with nogil:
        for j in range(<Py_ssize_t>u, n):
            a[j] = a[xs64_below(&s, u)]
    return s

def workload_shuffle(state, arr):
    """Fisher-Yates shuffle of arr in place. Returns the new PRNG state."""
    cdef uint64_t[::1] a = arr
    cdef uint64_t s = state, tmp, r
    cdef Py_ssize_t j
    with nogil:
        for j in range(a.shape[0] - 1, 0, -1):
            r = xs64_below(&s, <uint64_t>j + 1)
            tmp = a[j]
            a[j] = a[<Py_ssize_t>r]
            a[<Py_ssize_t>r] = tmp
    return s
