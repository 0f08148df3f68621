from array import array

import rehashmap
from rehashmap import census, snapshot_counters
from rehashmap.workload import WorkloadSpec, generate_workload


def test_fresh_table_census(make):
    rep = census(make(512))
    assert rep.total_buckets == 512
    assert rep.rehashed == 512  # joint allocation is born rehashed
    assert rep.empty == 512
    assert rep.overpopulated == 0
    assert rep.max_chain == 0
    assert rep.pairs == 0


def test_one_pair_census(make):
    t = make(512)
    t.insert(1, 1)
    rep = census(t)
    assert rep.empty == 511
    assert rep.nonempty == 1
    assert rep.pairs == 1
    assert rep.max_chain == 1


def test_overpopulation_threshold_is_a_report_parameter(make):
    t = make(16, identity_hash=True)
    for k in (0, 16, 32, 48, 64):  # all collide into bucket 0
        t.insert(k, k)
    assert census(t, 4).overpopulated == 1
    assert census(t, 4).max_chain == 5
    assert census(t, 5).overpopulated == 0


def test_counters_start_at_zero(make):
    c = snapshot_counters(make(4))
    assert (c.restarts, c.rehashes, c.growths) == (0, 0, 0)
    assert not c.stalled_growth
    assert c.lock_order_violations == 0


def test_growth_counter_boundary_is_exact(make):
    # from 512 buckets, the insert that makes the table full triggers the
    # next growth; 4095 keys stay at 3 growths, the 4096th adds a fourth
    t = make(512)
    t.insert_many(array("Q", range(4095)))
    assert snapshot_counters(t).growths == 3
    t.insert(4095, 4095)
    assert snapshot_counters(t).growths == 4
    assert t.capacity == 8192


def test_census_trend_more_unique_means_less_rehashed():
    # at low uniqueness the many repeat-lookups touch (and rehash) nearly
    # every bucket; an all-unique input leaves the last segments mostly
    # new and the pairs piled up in parents
    out = {}
    for pct in (5, 100):
        spec = WorkloadSpec(4096, pct, seed=31)
        table = rehashmap.make_table(512)
        table.insert_many(generate_workload(spec))
        out[pct] = census(table)
    assert out[5].rehashed >= out[100].rehashed
    assert out[5].overpopulated <= out[100].overpopulated
    assert out[5].total_buckets == out[100].total_buckets
