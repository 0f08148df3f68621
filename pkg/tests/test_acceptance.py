"""Acceptance gate: one test per criterion, run at the stated tolerances.

Criterion 4 note: the growth trigger fires when the pre-increment pair
count reaches the mask (the table is full), so filling an exact power of
two reaches the next boundary: 2,000,000 unique keys from 512 buckets
give exactly 12 growths (final capacity 2^21), while exactly 2^21 keys
trigger a 13th on the last insert. Both pairings are asserted below;
the 2M figure is the reported statistic this criterion pins.
"""

import os
import time
from array import array

import pytest

import rehashmap
from rehashmap import geometry as g
from rehashmap import snapshot_counters
from rehashmap.bench import run_fill, run_lookup
from rehashmap.harness import (
    enumerate_exhaustive,
    replay_race_scenario,
    run_concurrent_stress,
    run_differential,
)
from rehashmap.instrumentation import census
from rehashmap.workload import WorkloadSpec, XorShift64Star, generate_workload
from oracles import (
    bucket_index_division,
    level_mask_scan,
    next_child_mask_scan,
    parent_index_modulo,
    segment_of_scan,
)

pytestmark = pytest.mark.acceptance

ALL_IMPLS = ["pure"] + (["compiled"] if rehashmap.HAVE_SPEEDUPS else [])


def _report(n: int, desc: str):
    print(f"ACCEPTANCE {n}: PASS - {desc}")


def _fill_uniques(n_keys: int, impl: str = "auto", seed: int = 1,
                  initial: int = 512):
    table = rehashmap.make_table(initial, impl=impl)
    arr = generate_workload(WorkloadSpec(n_keys, 100, seed=seed))
    table.insert_many(arr)
    assert table.size() == n_keys
    return table


def test_criterion_1_index_math_matches_oracles():
    t0 = time.perf_counter()
    top = 1 << 12
    masks = [(1 << b) - 1 for b in range(1, 13)]
    for h in range(top):
        for m in masks:
            assert g.bucket_index(h, m) == bucket_index_division(h, m)
            want = next_child_mask_scan(h, m)
            if want is None:
                with pytest.raises(ValueError):
                    g.next_child_mask(h, m)
            else:
                assert g.next_child_mask(h, m) == want
    for i in range(2, top):
        assert g.parent_index(i) == parent_index_modulo(i)
    for i in range(top):
        k, base, size = segment_of_scan(i)
        assert g.segment_index_of(i) == k
        assert g.segment_base(k) == base
        assert g.segment_size(k) == size
        assert g.level_mask(i) == level_mask_scan(i)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report(1, f"index math equals brute-force oracles for h,m < 2^12 "
            f"({elapsed:.1f}s)")


def test_criterion_2_doubling_congruence_property():
    rng = XorShift64Star(0xF2F2)
    for _ in range(1_000_000):
        h = rng.next_u64()
        s = 1 << (1 + rng.randrange(61))
        assert (h % (2 * s)) % s == h % s
    _report(2, "(h mod 2S) mod S == h mod S over 10^6 random samples")


@pytest.mark.parametrize("impl", ALL_IMPLS)
def test_criterion_3_paper_race_replay(impl):
    obs = replay_race_scenario(impl=impl)
    assert obs["two_level"] == (True, 1, 14)
    assert obs["child_still_new"] == (True, 0, 2)
    _report(3, f"stale-mask lookup replays exactly ({impl}: 1 restart to "
            f"bucket 14; still-new child: 0 restarts, bucket 2)")


def test_criterion_4_growth_count_is_deterministic():
    t0 = time.perf_counter()
    # the reported figure: 2M pairs from 512 buckets grow the table 12 times
    table = _fill_uniques(2_000_000)
    assert snapshot_counters(table).growths == 12
    assert table.capacity == 1 << 21
    del table

    # trigger boundary: a full table grows, so exact powers of two land
    # one growth past the 2M figure (see module docstring)
    assert snapshot_counters(_fill_uniques((1 << 21) - 1)).growths == 12
    assert snapshot_counters(_fill_uniques(1 << 21)).growths == 13

    # desk scale, pure implementation included
    for impl in ALL_IMPLS:
        assert snapshot_counters(
            _fill_uniques((1 << 17) - 1, impl=impl)).growths == 8
        assert snapshot_counters(
            _fill_uniques(1 << 17, impl=impl)).growths == 9
        assert snapshot_counters(
            _fill_uniques(100_000, impl=impl)).growths == 8
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(4, f"growths: 2,000,000 keys -> 12 exactly; desk 100k -> 8 "
            f"(boundary 2^21 -> 13 by the full-table trigger) "
            f"({elapsed:.1f}s single-threaded)")


@pytest.mark.parametrize("impl", ALL_IMPLS)
def test_criterion_5_differential_and_exhaustive(impl):
    result = run_differential(20260808, 100_000, impl=impl,
                              key_universe=1024, initial_buckets=2)
    assert result.passed, result.divergence
    assert result.growths >= 6
    checked = enumerate_exhaustive(3, 5, impl=impl, initial_buckets=2)
    assert checked == sum(9 ** n for n in range(6))  # full coverage
    _report(5, f"{impl}: 10^5 random ops match the oracle across "
            f"{result.growths} growths; all {checked} sequences "
            f"(universe 3, length <= 5) match exhaustively")


def test_criterion_6_concurrent_stress_ten_seeds():
    for seed in range(10):
        result = run_concurrent_stress(8, 100_000, seed, impl="auto")
        assert result.passed, (seed, result.failures)
        assert result.counters.lock_order_violations == 0
    _report(6, "8 threads x 10^5 mixed ops x 10 seeds: contents, size, "
            "level containment, and forced-rehash placement all hold")


def test_criterion_7_restart_rarity_insert_only():
    spec = WorkloadSpec(1 << 20, 100, seed=7, threads=8)
    arr = generate_workload(spec)
    table = rehashmap.make_table(512)
    rep = run_fill(table, arr, 8, expected_unique=spec.unique_keys, spec=spec)
    ratio = rep.restarts / rep.total_ops
    assert ratio < 1e-3, f"restart ratio {ratio}"
    _report(7, f"insert-only 2^20 keys at 8 threads: {rep.restarts} "
            f"restarts / {rep.total_ops} ops = {ratio:.2e} < 1e-3")


def test_criterion_8_census_trend_across_uniqueness():
    reports = {}
    for pct in (5, 30, 100):
        spec = WorkloadSpec(1 << 17, pct, seed=404)
        table = rehashmap.make_table(512)
        table.insert_many(generate_workload(spec))
        assert table.size() == spec.unique_keys
        reports[pct] = census(table)
    assert (reports[5].rehashed >= reports[30].rehashed
            >= reports[100].rehashed)
    assert (reports[5].overpopulated <= reports[30].overpopulated
            <= reports[100].overpopulated)
    _report(8, "census ordering 5 -> 30 -> 100% unique: rehashed "
            f"{reports[5].rehashed} >= {reports[30].rehashed} >= "
            f"{reports[100].rehashed}, overpopulated "
            f"{reports[5].overpopulated} <= {reports[30].overpopulated} <= "
            f"{reports[100].overpopulated}")


def test_criterion_9_thread_scaling_sanity():
    cores = os.cpu_count() or 1
    if cores < 4:
        pytest.skip(f"scaling gate needs >= 4 cores, host has {cores}")
    if not rehashmap.HAVE_SPEEDUPS:
        pytest.skip("scaling gate needs the compiled core; the GIL "
                    "serializes the pure implementation")
    spec = WorkloadSpec(1 << 19, 100, seed=5)
    arr = generate_workload(spec)
    thr = {}
    for threads in (1, 4):
        table = rehashmap.make_table(512, impl="compiled")
        fill = run_fill(table, arr, threads,
                        expected_unique=spec.unique_keys, spec=spec)
        look = run_lookup(table, arr, threads,
                          expected_hits=len(arr), spec=spec)
        thr[threads] = (fill.throughput, look.throughput)
    fill_x = thr[4][0] / thr[1][0]
    look_x = thr[4][1] / thr[1][1]
    assert look_x >= 1.8, f"lookup scaled only {look_x:.2f}x"
    assert fill_x >= 1.2, f"fill scaled only {fill_x:.2f}x"
    _report(9, f"4-thread scaling: lookup {look_x:.2f}x, fill {fill_x:.2f}x")


def test_criterion_10_deadlock_freedom_and_lock_order():
    # forced three-level recursion: locks walk 14 -> 6 -> 2, strictly down
    for impl in ALL_IMPLS:
        t = rehashmap.make_table(4, impl=impl, identity_hash=True)
        for h in (2, 6, 14):
            t.insert(h, h)
        t.force_grow()
        t.force_grow()
        t.rehash_bucket_now(14)
        assert snapshot_counters(t).lock_order_violations == 0

    # stress completes under the watchdog with zero order violations
    t0 = time.perf_counter()
    for seed in (101, 202):
        result = run_concurrent_stress(8, 50_000, seed, impl="auto",
                                       timeout=60.0)
        assert result.passed, result.failures
        assert not any("watchdog" in f for f in result.failures)
        assert result.counters.lock_order_violations == 0
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _report(10, f"rehash recursion locks strictly decreasing indices; "
            f"stress joined without watchdog timeouts ({elapsed:.1f}s)")
