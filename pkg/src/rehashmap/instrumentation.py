"""Counters and bucket census.

Counter updates inside the table are contention-tolerant and never affect
its behavior; a census walks every bucket and is exact only while no
mutators run. Both work identically against the pure-Python map and the
compiled core, which expose the same ``counter_values`` /
``census_counts`` raw tuples wrapped here.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Counters:
    restarts: int
    rehashes: int
    growths: int
    stalled_growth: bool
    lock_order_violations: int


@dataclass(frozen=True)
class CensusReport:
    total_buckets: int
    rehashed: int
    empty: int
    overpopulated: int
    max_chain: int
    pairs: int

    @property
    def nonempty(self) -> int:
        return self.total_buckets - self.empty


def snapshot_counters(table) -> Counters:
    """Point read of the table's counters (each individually atomic)."""
    restarts, rehashes, growths, stalled, violations = table.counter_values()
    return Counters(restarts, rehashes, growths, bool(stalled), violations)


def census(table, overpopulation_threshold: int = 4) -> CensusReport:
    """Scan all buckets under the current mask; table must be quiescent.

    "Overpopulated" means a chain strictly longer than the threshold; the
    threshold is a report parameter, so only cross-run orderings are
    meaningful, never absolute counts.
    """
    total, rehashed, empty, overpop, max_chain, pairs = (
        table.census_counts(overpopulation_threshold))
    return CensusReport(total, rehashed, empty, overpop, max_chain, pairs)
