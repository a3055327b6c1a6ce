"""Idle-time and wall-time metrics over a schedule trace.

The quantum device's timeline over [0, makespan) partitions exactly into
busy time (executing quantum blocks), allocated-idle time (held by a job
but idle — the time the user wastes), and unallocated-idle time (held by
nobody). Turnaround is reported against the parent job's submit time even
for split chains, so the user-visible latency of splitting stays honest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

from hqsim.model import SimTime
from hqsim.scheduler import EventKind, ScheduleTrace


class TraceIntegrityError(ValueError):
    """The trace is internally inconsistent (e.g. device double-booked)."""


@dataclass(frozen=True)
class MetricsReport:
    makespan: SimTime
    quantum_busy: SimTime
    quantum_allocated_idle: SimTime
    quantum_unallocated_idle: SimTime
    per_job_turnaround: dict[str, SimTime]

    @property
    def total_idle(self) -> SimTime:
        return self.quantum_allocated_idle + self.quantum_unallocated_idle

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "quantum_busy": self.quantum_busy,
            "quantum_allocated_idle": self.quantum_allocated_idle,
            "quantum_unallocated_idle": self.quantum_unallocated_idle,
            "per_job_turnaround": dict(sorted(self.per_job_turnaround.items())),
        }


@dataclass(frozen=True)
class MetricDelta:
    """split-minus-monolithic change of one metric; negative is better."""

    metric: str
    monolithic: SimTime
    split: SimTime
    delta: SimTime
    pct_change: float | None  # delta / monolithic, None when undefined

    @property
    def verdict(self) -> str:
        if self.delta < 0:
            return "improved"
        if self.delta > 0:
            return "regressed"
        return "unchanged"

    def to_dict(self) -> dict:
        return {
            "monolithic": self.monolithic,
            "split": self.split,
            "delta": self.delta,
            "pct_change": self.pct_change,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class ComparisonReport:
    makespan: MetricDelta
    quantum_allocated_idle: MetricDelta
    total_idle: MetricDelta

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan.to_dict(),
            "quantum_allocated_idle": self.quantum_allocated_idle.to_dict(),
            "total_idle": self.total_idle.to_dict(),
        }


def compute_metrics(trace: ScheduleTrace) -> MetricsReport:
    """Aggregate device utilization and per-job turnaround from a trace."""
    makespan = trace.makespan

    quantum_allocs = sorted(
        (a for a in trace.allocations if a.is_quantum), key=lambda a: a.start
    )
    for first, second in zip(quantum_allocs, quantum_allocs[1:]):
        if second.start < first.end:
            raise TraceIntegrityError(
                f"quantum allocations overlap: '{first.unit_id}' "
                f"[{first.start},{first.end}) and '{second.unit_id}' "
                f"[{second.start},{second.end})"
            )

    allocated = sum(a.length for a in quantum_allocs)
    busy = sum(a.busy_total for a in quantum_allocs)

    complete_times: dict[str, SimTime] = {
        e.unit_id: e.time
        for e in trace.events
        if e.kind is EventKind.COMPLETE
    }
    turnaround: dict[str, SimTime] = {}
    for unit in trace.units:
        done = complete_times[unit.unit_id]
        job = unit.parent_job_id
        turnaround[job] = max(
            turnaround.get(job, 0), done - unit.submit_time
        )

    return MetricsReport(
        makespan=makespan,
        quantum_busy=busy,
        quantum_allocated_idle=allocated - busy,
        quantum_unallocated_idle=makespan - allocated,
        per_job_turnaround=turnaround,
    )


def _delta(metric: str, mono: SimTime, split: SimTime) -> MetricDelta:
    return MetricDelta(
        metric=metric,
        monolithic=mono,
        split=split,
        delta=split - mono,
        pct_change=(split - mono) / mono if mono != 0 else None,
    )


def compare(mono: MetricsReport, split: MetricsReport) -> ComparisonReport:
    """Contrast a monolithic run with a split run of the same workload."""
    return ComparisonReport(
        makespan=_delta("makespan", mono.makespan, split.makespan),
        quantum_allocated_idle=_delta(
            "quantum_allocated_idle",
            mono.quantum_allocated_idle,
            split.quantum_allocated_idle,
        ),
        total_idle=_delta("total_idle", mono.total_idle, split.total_idle),
    )


def comparison_document(
    mono: MetricsReport, split: MetricsReport, report: ComparisonReport
) -> str:
    doc = {
        "monolithic": mono.to_dict(),
        "split": split.to_dict(),
        "comparison": report.to_dict(),
    }
    return json.dumps(doc, indent=2) + "\n"


GANTT_HEADER = ("unit", "resource", "start", "end", "busy_start", "busy_end")


def gantt_rows(trace: ScheduleTrace) -> Iterator[tuple]:
    """One row per busy sub-interval of each allocation, for plotting.

    Allocations with no busy time (an all-idle hold) yield a single row
    with empty busy columns.
    """
    for alloc in trace.allocations:
        if not alloc.busy:
            yield (alloc.unit_id, alloc.resource, alloc.start, alloc.end, "", "")
            continue
        for busy_start, busy_end in alloc.busy:
            yield (
                alloc.unit_id,
                alloc.resource,
                alloc.start,
                alloc.end,
                busy_start,
                busy_end,
            )
