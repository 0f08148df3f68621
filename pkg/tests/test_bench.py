import pytest

import rehashmap
from rehashmap.bench import (
    CSV_COLUMNS,
    BenchCorrectnessError,
    emit_report,
    main,
    run_fill,
    run_lookup,
)
from rehashmap.instrumentation import census
from rehashmap.workload import WorkloadSpec, generate_workload


def make_filled(impl, unique=3000, pct=30, threads=1, seed=5):
    spec = WorkloadSpec(unique, pct, seed=seed, threads=threads,
                        initial_buckets=512)
    arr = generate_workload(spec)
    table = rehashmap.make_table(512, impl=impl)
    return table, arr, spec


def test_run_fill_counts_and_sizes(impl):
    table, arr, spec = make_filled(impl)
    rep = run_fill(table, arr, 2, expected_unique=spec.unique_keys, spec=spec)
    assert rep.phase == "fill"
    assert rep.total_ops == len(arr)
    assert rep.throughput == pytest.approx(rep.total_ops / rep.seconds)
    assert table.size() == spec.unique_keys
    assert rep.growths == 3  # 512 -> 4096 for 3000 keys


def test_single_threaded_fill_has_no_restarts(impl):
    table, arr, spec = make_filled(impl)
    rep = run_fill(table, arr, 1, expected_unique=spec.unique_keys, spec=spec)
    assert rep.restarts == 0


def test_run_lookup_all_hits(impl):
    table, arr, spec = make_filled(impl)
    run_fill(table, arr, 1, spec=spec)
    rep = run_lookup(table, arr, 2, expected_hits=len(arr), spec=spec)
    assert rep.extra["hits"] == len(arr)
    assert rep.growths == 0


def test_run_lookup_disjoint_array_misses_everything(impl):
    table, arr, spec = make_filled(impl)
    run_fill(table, arr, 1, spec=spec)
    other = generate_workload(WorkloadSpec(1000, 100, seed=999))
    before = rehashmap.snapshot_counters(table).restarts
    rep = run_lookup(table, other, 1, expected_hits=0, spec=spec)
    assert rep.extra["hits"] == 0
    assert rehashmap.snapshot_counters(table).restarts == before


def test_run_lookup_flags_misses(impl):
    table, arr, spec = make_filled(impl)
    run_fill(table, arr, 1, spec=spec)
    table.erase(arr[0])
    with pytest.raises(BenchCorrectnessError):
        run_lookup(table, arr, 1, expected_hits=len(arr), spec=spec)


def test_fill_results_do_not_depend_on_thread_count(impl):
    # fixed seed: same final contents and (after a forced rehash) the
    # same census, whether one thread filled or three raced
    reports = {}
    for threads in (1, 3):
        table, arr, spec = make_filled(impl, unique=4000, pct=25)
        run_fill(table, arr, threads, expected_unique=4000, spec=spec)
        table.force_rehash_all()
        reports[threads] = (table.size(), table.census_counts(4),
                            table.count_hits(arr))
    assert reports[1] == reports[3]


def test_emit_report_writes_header_once(tmp_path, impl):
    table, arr, spec = make_filled(impl, unique=500, pct=100)
    rep = run_fill(table, arr, 1, spec=spec)
    path = tmp_path / "out.csv"
    emit_report([rep], str(path))
    emit_report([rep], str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    # no census attached: the census cells stay empty
    assert lines[1].endswith(",,,,")


def test_emit_report_census_columns(tmp_path, impl):
    table, arr, spec = make_filled(impl, unique=500, pct=100)
    rep = run_fill(table, arr, 1, spec=spec)
    rep.census = census(table)
    path = tmp_path / "out.csv"
    emit_report([rep], str(path))
    row = path.read_text().strip().splitlines()[1].split(",")
    assert len(row) == len(CSV_COLUMNS)
    assert all(cell != "" for cell in row)


# ----------------------------------------------------------------------
# CLI end to end

def test_cli_both_writes_two_rows(tmp_path):
    out = tmp_path / "bench.csv"
    rc = main(["both", "--unique-keys", "2000", "--unique-pct", "50",
               "--threads", "2", "--census", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("fill,2,50,2000,4000,")
    assert lines[2].startswith("lookup,2,50,2000,4000,")


def test_cli_census_subcommand_is_fill_with_census(tmp_path, capsys):
    rc = main(["census", "--unique-keys", "1000", "--force-rehash"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "census:" in out
    assert "rehashed=" in out


def test_cli_lookup_only(capsys):
    rc = main(["lookup", "--unique-keys", "1500", "--unique-pct", "20"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("lookup:")
    assert "hits=7500" in out


def test_cli_stress_exits_zero():
    rc = main(["stress", "--threads", "2", "--ops-per-thread", "3000",
               "--seed", "7", "--initial-buckets", "64"])
    assert rc == 0


def test_cli_bad_out_path_is_io_failure(tmp_path):
    rc = main(["fill", "--unique-keys", "100",
               "--out", str(tmp_path / "no" / "such" / "dir.csv")])
    assert rc == 1


def test_cli_impl_pure_and_paper_flag_parse():
    rc = main(["fill", "--unique-keys", "300", "--impl", "pure"])
    assert rc == 0
