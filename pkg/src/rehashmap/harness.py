"""Correctness harness: oracle, differential tests, race replay, stress.

The ground truth for single-threaded behavior is a plain dict with
insert-if-absent semantics; the table must agree with it on every return
value and on the final contents. For concurrency, where no sequential
oracle applies, the harness relies on the fact that every operation
returns a boolean: per key, successful inserts and erases must alternate,
so the final contents are fully determined by the merged per-key outcome
counts. Structural invariants (level containment, full placement after a
forced rehash) are checked on top.

The worked race interleaving from the table's design notes is replayed
deterministically through the test seams (identity hasher, manual growth,
manual per-bucket rehash, lookups started from a stale mask).
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import rehashmap
from rehashmap.geometry import next_child_mask
from rehashmap.instrumentation import Counters, snapshot_counters

Op = tuple[str, int]  # ("insert" | "find" | "erase", key)


class ReferenceModel:
    """Sequential associative set with attached values; trivially correct."""

    def __init__(self):
        self._d = {}

    def insert(self, key, value) -> bool:
        if key in self._d:
            return False
        self._d[key] = value
        return True

    def find(self, key) -> bool:
        return key in self._d

    def erase(self, key) -> bool:
        return self._d.pop(key, None) is not None

    def size(self) -> int:
        return len(self._d)

    def keys(self):
        return self._d.keys()


def _default_factory(impl: str) -> Callable:
    def factory(initial_buckets, identity_hash=False, instrumented=True):
        return rehashmap.make_table(
            initial_buckets, impl=impl,
            identity_hash=identity_hash, instrumented=instrumented)
    return factory


def _apply(table, op: str, key: int) -> bool:
    if op == "insert":
        return table.insert(key, key)
    if op == "find":
        return table.find(key)
    return table.erase(key)


# ----------------------------------------------------------------------
# differential testing

@dataclass
class DifferentialResult:
    passed: bool
    operations: int
    growths: int
    divergence: Optional[str] = None
    trace: Optional[list[Op]] = None

    def __bool__(self):
        return self.passed


def _first_divergence(ops: list[Op], factory, initial_buckets: int,
                      universe: int) -> Optional[str]:
    """Replay ops against table and model; describe the first disagreement."""
    table = factory(initial_buckets)
    model = ReferenceModel()
    for n, (op, key) in enumerate(ops):
        got = _apply(table, op, key)
        want = _apply(model, op, key)
        if got != want:
            return f"op {n}: {op}({key}) returned {got}, oracle says {want}"
    if table.size() != model.size():
        return f"final size {table.size()}, oracle {model.size()}"
    for key in range(universe):
        if table.find(key) != model.find(key):
            return f"final contents differ at key {key}"
    return None


def _minimize(ops: list[Op], factory, initial_buckets: int,
              universe: int) -> list[Op]:
    """Shrink a diverging trace: shortest failing prefix, then greedy drop."""
    def fails(candidate):
        return _first_divergence(candidate, factory, initial_buckets,
                                 universe) is not None

    lo, hi = 0, len(ops)  # invariant: ops[:hi] fails, ops[:lo] may not
    while lo < hi:
        mid = (lo + hi) // 2
        if fails(ops[:mid]):
            hi = mid
        else:
            lo = mid + 1
    trace = ops[:hi]
    if len(trace) <= 200:
        i = 0
        while i < len(trace):
            candidate = trace[:i] + trace[i + 1:]
            if fails(candidate):
                trace = candidate
            else:
                i += 1
    return trace


def run_differential(seed: int, op_count: int, *, impl: str = "auto",
                     key_universe: int = 1024, initial_buckets: int = 2,
                     factory: Optional[Callable] = None) -> DifferentialResult:
    """Random single-threaded ops against the dict oracle.

    The small key universe forces collisions, erase/reinsert churn, and
    several growths from the minimum capacity.
    """
    factory = factory or _default_factory(impl)
    rng = random.Random(seed)
    ops: list[Op] = []
    for _ in range(op_count):
        r = rng.random()
        op = "insert" if r < 0.5 else ("find" if r < 0.75 else "erase")
        ops.append((op, rng.randrange(key_universe)))

    table = factory(initial_buckets)
    model = ReferenceModel()
    for n, (op, key) in enumerate(ops):
        got = _apply(table, op, key)
        want = _apply(model, op, key)
        if got != want:
            trace = _minimize(ops[:n + 1], factory, initial_buckets,
                              key_universe)
            return DifferentialResult(
                False, op_count, snapshot_counters(table).growths,
                divergence=f"{op}({key}) returned {got}, oracle says {want}",
                trace=trace)

    growths = snapshot_counters(table).growths
    if table.size() != model.size():
        return DifferentialResult(
            False, op_count, growths,
            divergence=f"final size {table.size()} vs {model.size()}",
            trace=_minimize(ops, factory, initial_buckets, key_universe))
    for key in range(key_universe):
        if table.find(key) != model.find(key):
            return DifferentialResult(
                False, op_count, growths,
                divergence=f"final contents differ at key {key}",
                trace=_minimize(ops, factory, initial_buckets, key_universe))
    return DifferentialResult(True, op_count, growths)


def enumerate_exhaustive(key_universe: int, max_len: int, *,
                         impl: str = "auto", initial_buckets: int = 2,
                         factory: Optional[Callable] = None) -> int:
    """Check every op sequence up to max_len against the oracle.

    Covers the growth edge from the minimum capacity by brute force.
    Returns the number of sequences checked; raises on the first
    divergence.
    """
    factory = factory or _default_factory(impl)
    alphabet = [(op, key)
                for op in ("insert", "find", "erase")
                for key in range(key_universe)]
    checked = 0
    stack: list[list[Op]] = [[]]
    while stack:
        seq = stack.pop()
        table = factory(initial_buckets)
        model = ReferenceModel()
        for op, key in seq:
            got = _apply(table, op, key)
            want = _apply(model, op, key)
            if got != want:
                raise AssertionError(
                    f"divergence on {seq}: {op}({key}) -> {got}, "
                    f"oracle {want}")
        if table.size() != model.size():
            raise AssertionError(f"size divergence on {seq}")
        for key in range(key_universe):
            if table.find(key) != model.find(key):
                raise AssertionError(f"contents divergence on {seq} at {key}")
        checked += 1
        if len(seq) < max_len:
            stack.extend(seq + [step] for step in alphabet)
    return checked


# ----------------------------------------------------------------------
# the worked race interleaving, replayed deterministically

def replay_race_scenario(*, impl: str = "auto",
                         factory: Optional[Callable] = None) -> dict:
    """Replay the stale-mask lookup race at two growth levels plus variants.

    Asserts every step; returns the observations for reporting.
    """
    factory = factory or _default_factory(impl)

    # capacity 4, key with hash 14 lives in bucket 2 (14 & 3)
    t = factory(4, identity_hash=True)
    assert t.insert(14, 14)
    assert t.force_grow() == 7
    assert t.force_grow() == 15
    assert t.rehash_bucket_now(6)  # pulls 14 out of bucket 2 into 6
    assert not t.is_bucket_rehashed(14)  # final home not rehashed yet

    # the race check must consult bucket 6 (next mask after 3 is 7),
    # not bucket 14 under the current mask 15, which still looks new
    assert next_child_mask(14, 3) == 7
    assert 14 & 7 == 6 and 14 & 15 == 14
    assert t.is_bucket_rehashed(6)

    found, restarts, where = t.find_from_mask(14, 3)
    assert found, "key lost after rehash"
    assert restarts == 1, f"expected exactly one restart, got {restarts}"
    assert where == 14, f"expected on-demand rehash into 14, got {where}"
    assert t.is_bucket_rehashed(14)

    # variant: bucket 6 still new; the pair cannot have left bucket 2,
    # so the stale lookup is a plain hit with no restart
    t2 = factory(4, identity_hash=True)
    t2.insert(14, 14)
    t2.force_grow()
    t2.force_grow()
    found2, restarts2, where2 = t2.find_from_mask(14, 3)
    assert found2 and restarts2 == 0 and where2 == 2

    # variant at one growth level: the child check hits bucket 6 directly
    t3 = factory(4, identity_hash=True)
    t3.insert(14, 14)
    t3.force_grow()
    t3.rehash_bucket_now(6)
    found3, restarts3, where3 = t3.find_from_mask(14, 3)
    assert found3 and restarts3 == 1 and where3 == 6

    return {
        "two_level": (found, restarts, where),
        "child_still_new": (found2, restarts2, where2),
        "one_level": (found3, restarts3, where3),
    }


# ----------------------------------------------------------------------
# concurrent stress with post-hoc accounting

@dataclass
class StressResult:
    passed: bool
    operations: int
    final_size: int
    counters: Counters
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.passed


def run_concurrent_stress(threads: int, per_thread_ops: int, seed: int, *,
                          impl: str = "auto", initial_buckets: int = 512,
                          key_universe: Optional[int] = None,
                          timeout: float = 60.0,
                          factory: Optional[Callable] = None) -> StressResult:
    """Mixed random workloads on shared keys; verify at quiescence.

    Insert-heavy mix over an overlapping key range so growth happens under
    traffic. After joining: per-key boolean accounting must explain the
    final contents exactly, the size counter must match, every stored pair
    must satisfy level containment, and a forced full rehash must reach
    exact placement. The watchdog bounds the join; a hang is a failure
    (deadlock), not a wait.
    """
    factory = factory or _default_factory(impl)
    universe = key_universe or max(64, (threads * per_thread_ops) // 32)
    table = factory(initial_buckets)
    tallies = [None] * threads
    errors: list[str] = []
    barrier = threading.Barrier(threads)

    def worker(tid: int):
        rng = random.Random((seed << 8) | tid)
        ins: dict[int, int] = {}
        ers: dict[int, int] = {}
        barrier.wait()
        try:
            for _ in range(per_thread_ops):
                r = rng.random()
                key = rng.randrange(universe)
                if r < 0.55:
                    if table.insert(key, key):
                        ins[key] = ins.get(key, 0) + 1
                elif r < 0.80:
                    table.find(key)
                else:
                    if table.erase(key):
                        ers[key] = ers.get(key, 0) + 1
            tallies[tid] = (ins, ers)
        except Exception as exc:
            errors.append(f"thread {tid} crashed: {exc!r}")

    pool = [threading.Thread(target=worker, args=(tid,), daemon=True)
            for tid in range(threads)]
    for th in pool:
        th.start()
    deadline = timeout
    for th in pool:
        th.join(deadline)
        if th.is_alive():
            errors.append(f"watchdog: {th.name} still running after "
                          f"{timeout}s (deadlock?)")
            break

    ops = threads * per_thread_ops
    if errors:
        return StressResult(False, ops, table.size(),
                            snapshot_counters(table), errors)

    # merge per-key outcomes: successes alternate, so net is 0 or 1 and
    # equals final presence
    net: dict[int, int] = {}
    for ins, ers in tallies:
        for k, n in ins.items():
            net[k] = net.get(k, 0) + n
        for k, n in ers.items():
            net[k] = net.get(k, 0) - n
    expected_present = {k for k, n in net.items() if n == 1}
    for k, n in net.items():
        if n not in (0, 1):
            errors.append(f"key {k}: net outcome {n}, lost or duplicated op")
    for k in range(universe):
        present = table.find(k)
        if present != (k in expected_present):
            errors.append(f"key {k}: present={present}, accounting says "
                          f"{k in expected_present}")
    if table.size() != len(expected_present):
        errors.append(f"size {table.size()} != accounted "
                      f"{len(expected_present)}")
    bad = table.check_level_containment()
    if bad:
        errors.append(f"{bad} pairs violate level containment")
    table.force_rehash_all()
    bad = table.check_full_placement()
    if bad:
        errors.append(f"{bad} pairs misplaced after force_rehash_all")
    counters = snapshot_counters(table)
    if counters.lock_order_violations:
        errors.append(f"{counters.lock_order_violations} lock order "
                      f"violations during rehash recursion")
    return StressResult(not errors, ops, table.size(), counters, errors)
