"""Throughput benchmark and census CLI.

Two timed phases over one generated key array: ``fill`` inserts it across
worker threads (duplicates degrade to lookups, so at 5% uniqueness the
phase is 95% reads), ``lookup`` then checks every key is found. Workers
get contiguous chunks of the array, so the timed region has zero
coordination beyond the table itself. Timing excludes workload generation
and table creation. Reports append to a CSV whose schema is stable:

    phase,threads,unique_pct,unique_keys,total_ops,seconds,throughput,
    restarts,growths,rehashed,empty,overpopulated,max_chain

Census columns stay empty unless a census was taken. Any correctness
failure (missed key, size mismatch) exits nonzero.

Subcommands: fill, lookup, both, census (a fill with the census forced
on), stress (randomized concurrent harness), compare (pure vs compiled
on the same workload; its CSV gains a trailing ``impl`` column).
"""

from __future__ import annotations

import argparse
import os
import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import rehashmap
from rehashmap.instrumentation import CensusReport, census, snapshot_counters
from rehashmap.workload import WorkloadSpec, generate_workload

CSV_COLUMNS = [
    "phase", "threads", "unique_pct", "unique_keys", "total_ops",
    "seconds", "throughput", "restarts", "growths",
    "rehashed", "empty", "overpopulated", "max_chain",
]


class BenchCorrectnessError(RuntimeError):
    """The benchmark observed wrong table behavior, not just bad timing."""


@dataclass
class BenchReport:
    phase: str
    threads: int
    unique_pct: int
    unique_keys: int
    total_ops: int
    seconds: float
    throughput: float
    restarts: int
    growths: int
    census: Optional[CensusReport] = None
    extra: dict = field(default_factory=dict)

    def csv_row(self) -> str:
        cells = [
            self.phase, self.threads, self.unique_pct, self.unique_keys,
            self.total_ops, f"{self.seconds:.6f}", f"{self.throughput:.1f}",
            self.restarts, self.growths,
        ]
        if self.census is not None:
            cells += [self.census.rehashed, self.census.empty,
                      self.census.overpopulated, self.census.max_chain]
        else:
            cells += ["", "", "", ""]
        return ",".join(str(c) for c in cells)

    def describe(self) -> str:
        line = (f"{self.phase}: threads={self.threads} ops={self.total_ops} "
                f"secs={self.seconds:.3f} throughput={self.throughput:,.0f}/s "
                f"restarts={self.restarts} growths={self.growths}")
        if self.census is not None:
            c = self.census
            line += (f" | census: rehashed={c.rehashed} empty={c.empty} "
                     f"overpopulated={c.overpopulated} max_chain={c.max_chain}")
        if self.extra:
            line += " | " + " ".join(f"{k}={v}" for k, v in self.extra.items())
        return line


def _chunk_bounds(n: int, parts: int) -> list[tuple[int, int]]:
    return [(i * n // parts, (i + 1) * n // parts) for i in range(parts)]


def _timed_phase(table, arr, threads: int, op: str) -> tuple[float, int]:
    """Run op over contiguous chunks; wall time from all-start to all-done."""
    bounds = _chunk_bounds(len(arr), threads)
    view = memoryview(arr)
    barrier = threading.Barrier(threads + 1)
    results = [0] * threads
    errors: list[BaseException] = []

    def worker(idx: int, lo: int, hi: int):
        chunk = view[lo:hi]
        barrier.wait()
        try:
            if op == "fill":
                results[idx] = table.insert_many(chunk)
            else:
                results[idx] = table.count_hits(chunk)
        except BaseException as exc:
            errors.append(exc)

    workers = [threading.Thread(target=worker, args=(i, lo, hi), daemon=True)
               for i, (lo, hi) in enumerate(bounds)]
    for w in workers:
        w.start()
    barrier.wait()
    t0 = time.perf_counter()
    for w in workers:
        w.join()
    elapsed = time.perf_counter() - t0
    if errors:
        raise errors[0]
    return elapsed, sum(results)


def run_fill(table, arr, threads: int, *, expected_unique: Optional[int] = None,
             spec: Optional[WorkloadSpec] = None) -> BenchReport:
    """Timed concurrent insertion of the whole array."""
    before = snapshot_counters(table)
    elapsed, inserted = _timed_phase(table, arr, threads, "fill")
    after = snapshot_counters(table)
    if expected_unique is not None and table.size() != expected_unique:
        raise BenchCorrectnessError(
            f"fill ended with size {table.size()}, expected {expected_unique}")
    return BenchReport(
        phase="fill",
        threads=threads,
        unique_pct=spec.unique_pct if spec else 0,
        unique_keys=spec.unique_keys if spec else table.size(),
        total_ops=len(arr),
        seconds=elapsed,
        throughput=len(arr) / elapsed if elapsed > 0 else float("inf"),
        restarts=after.restarts - before.restarts,
        growths=after.growths - before.growths,
        extra={"inserted": inserted},
    )


def run_lookup(table, arr, threads: int, *, expected_hits: Optional[int] = None,
               spec: Optional[WorkloadSpec] = None) -> BenchReport:
    """Timed concurrent lookup of the whole array over a filled table."""
    before = snapshot_counters(table)
    elapsed, hits = _timed_phase(table, arr, threads, "lookup")
    after = snapshot_counters(table)
    if expected_hits is not None and hits != expected_hits:
        raise BenchCorrectnessError(
            f"lookup hit {hits} of {len(arr)} keys, expected {expected_hits}")
    if after.growths != before.growths:
        raise BenchCorrectnessError("lookup phase must not grow the table")
    return BenchReport(
        phase="lookup",
        threads=threads,
        unique_pct=spec.unique_pct if spec else 0,
        unique_keys=spec.unique_keys if spec else table.size(),
        total_ops=len(arr),
        seconds=elapsed,
        throughput=len(arr) / elapsed if elapsed > 0 else float("inf"),
        restarts=after.restarts - before.restarts,
        growths=0,
        extra={"hits": hits},
    )


def emit_report(reports, path: str) -> None:
    """Append CSV rows, writing the header only into a new or empty file."""
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as fh:
        if need_header:
            fh.write(",".join(CSV_COLUMNS) + "\n")
        for rep in reports:
            fh.write(rep.csv_row() + "\n")


# ----------------------------------------------------------------------
# CLI

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rehash-bench",
        description="Benchmark and check the concurrent rehashing table.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--unique-keys", type=int, default=1 << 17)
    common.add_argument("--unique-pct", type=int, default=100)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--initial-buckets", type=int, default=512)
    common.add_argument("--impl", choices=("auto", "pure", "compiled"),
                        default="auto")
    common.add_argument("--paper-scale", action="store_true",
                        help="use 2^21 unique keys regardless of --unique-keys")
    common.add_argument("--census", action="store_true",
                        help="attach a bucket census to each report")
    common.add_argument("--force-rehash", action="store_true",
                        help="run force_rehash_all after the fill phase")
    common.add_argument("--overpop-threshold", type=int, default=4)
    common.add_argument("--out", metavar="FILE.csv",
                        help="append CSV rows to this file")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("fill", "timed concurrent fill"),
        ("lookup", "untimed fill, then timed concurrent lookup"),
        ("both", "timed fill followed by timed lookup"),
        ("census", "fill with the bucket census forced on"),
        ("compare", "run fill+lookup on pure and compiled cores"),
    ):
        sub.add_parser(name, parents=[common], help=doc)
    stress = sub.add_parser("stress", parents=[common],
                            help="randomized concurrent stress harness")
    stress.add_argument("--ops-per-thread", type=int, default=100_000)
    stress.add_argument("--seeds", type=int, default=1,
                        help="number of consecutive seeds to run")
    return parser


def _make_spec(args) -> WorkloadSpec:
    return WorkloadSpec(
        unique_keys=(1 << 21) if args.paper_scale else args.unique_keys,
        unique_pct=args.unique_pct,
        seed=args.seed,
        threads=args.threads,
        initial_buckets=args.initial_buckets,
    )


def _attach_census(report, table, args):
    report.census = census(table, args.overpop_threshold)


def _run_bench_command(args) -> list[BenchReport]:
    spec = _make_spec(args)
    arr = generate_workload(spec)
    table = rehashmap.make_table(spec.initial_buckets, impl=args.impl)
    reports = []
    want_census = args.census or args.command == "census"

    if args.command in ("fill", "both", "census"):
        rep = run_fill(table, arr, spec.threads,
                       expected_unique=spec.unique_keys, spec=spec)
        if args.force_rehash:
            table.force_rehash_all()
        if want_census:
            _attach_census(rep, table, args)
        reports.append(rep)
    else:  # lookup: untimed setup fill
        table.insert_many(arr)
        if table.size() != spec.unique_keys:
            raise BenchCorrectnessError(
                f"setup fill size {table.size()} != {spec.unique_keys}")
        if args.force_rehash:
            table.force_rehash_all()

    if args.command in ("lookup", "both"):
        rep = run_lookup(table, arr, spec.threads,
                         expected_hits=len(arr), spec=spec)
        if want_census:
            _attach_census(rep, table, args)
        reports.append(rep)
    return reports


def _run_compare(args) -> int:
    impls = ["pure"] + (["compiled"] if rehashmap.HAVE_SPEEDUPS else [])
    if len(impls) == 1:
        print("compiled core not built; comparing pure against itself "
              "is pointless", file=sys.stderr)
    spec = _make_spec(args)
    arr = generate_workload(spec)
    by_impl: dict[str, list[BenchReport]] = {}
    for impl in impls:
        table = rehashmap.make_table(spec.initial_buckets, impl=impl)
        fill = run_fill(table, arr, spec.threads,
                        expected_unique=spec.unique_keys, spec=spec)
        if args.force_rehash:
            table.force_rehash_all()
        look = run_lookup(table, arr, spec.threads,
                          expected_hits=len(arr), spec=spec)
        if args.census:
            _attach_census(look, table, args)
        by_impl[impl] = [fill, look]
        for rep in (fill, look):
            print(f"[{impl}] {rep.describe()}")
    if len(by_impl) == 2:
        for phase in (0, 1):
            pure = by_impl["pure"][phase]
            comp = by_impl["compiled"][phase]
            ratio = comp.throughput / pure.throughput
            print(f"speedup {pure.phase}: compiled is {ratio:.1f}x pure")
    if args.out:
        need_header = (not os.path.exists(args.out)
                       or os.path.getsize(args.out) == 0)
        with open(args.out, "a", encoding="utf-8") as fh:
            if need_header:
                fh.write(",".join(CSV_COLUMNS + ["impl"]) + "\n")
            for impl, reps in by_impl.items():
                for rep in reps:
                    fh.write(rep.csv_row() + f",{impl}\n")
    return 0


def _run_stress(args) -> int:
    from rehashmap.harness import run_concurrent_stress

    failures = 0
    for i in range(args.seeds):
        seed = args.seed + i
        result = run_concurrent_stress(
            args.threads, args.ops_per_thread, seed,
            impl=args.impl, initial_buckets=args.initial_buckets)
        status = "PASS" if result.passed else "FAIL"
        print(f"stress seed={seed} threads={args.threads} "
              f"ops={result.operations} size={result.final_size} "
              f"restarts={result.counters.restarts} "
              f"growths={result.counters.growths}: {status}")
        for line in result.failures:
            print(f"  {line}", file=sys.stderr)
        failures += not result.passed
    return 1 if failures else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "stress":
            return _run_stress(args)
        if args.command == "compare":
            return _run_compare(args)
        reports = _run_bench_command(args)
    except BenchCorrectnessError as exc:
        print(f"correctness failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 1
    for rep in reports:
        print(rep.describe())
    if args.out:
        try:
            emit_report(reports, args.out)
        except OSError as exc:
            print(f"i/o failure: {exc}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
