"""Deterministic discrete-event engine for heterogeneous co-allocation.

A schedulable unit requests a number of classical nodes and, optionally,
the single quantum device. Both partitions are acquired atomically when the
unit starts (het-job semantics) and the classical nodes are held for the
unit's whole duration. The quantum device is held either to completion
(monolithic jobs) or only up to a release offset (split sub-jobs with early
release via disconnect + scancel).

Policy: FCFS ordered by (ready_time, submit_time, unit_id) with aggressive
backfill — when the head unit's resources are not available, any later
ready unit whose resources are free may start. No reservations are made, so
this is one simple policy that produces the interleaved schedule splitting
is designed to enable; it is not a model of any production scheduler's
exact behavior.

The engine advances through an event queue (starts, releases, completions);
all times are integer ticks and identical inputs yield identical traces.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, TextIO

from hqsim.model import Phase, PhaseKind, ResourcePool, SimTime, WorkloadSpec
from hqsim.splitter import SplitPlan

QUANTUM_RESOURCE = "quantum"


class SimulationError(Exception):
    """Base class for scheduling errors."""


class UnsatisfiableUnitError(SimulationError):
    """A unit requests more resources than the pool will ever have."""


class DependencyError(SimulationError):
    """Dangling or cyclic dependency among units."""


@dataclass(frozen=True)
class SchedulableUnit:
    """One schedulable entity: a monolithic job or a split sub-job.

    ``quantum_release_offset`` selects the quantum hold mode: None holds the
    device until completion (monolithic), an integer offset releases it at
    start + offset (early release). The offset never exceeds the duration.
    """

    unit_id: str
    parent_job_id: str
    classical_nodes: int
    phases: tuple[Phase, ...]
    needs_quantum: bool
    quantum_release_offset: SimTime | None = None
    submit_time: SimTime = 0
    depends_on: str | None = None

    @property
    def total_duration(self) -> SimTime:
        return sum(p.duration for p in self.phases)

    @property
    def quantum_hold(self) -> SimTime:
        """Ticks the quantum device stays allocated once the unit starts."""
        if not self.needs_quantum:
            return 0
        if self.quantum_release_offset is None:
            return self.total_duration
        return self.quantum_release_offset


class EventKind(str, Enum):
    SUBMIT = "submit"
    START = "start"
    QUANTUM_ACQUIRE = "quantum_acquire"
    QUANTUM_RELEASE = "quantum_release"
    COMPLETE = "complete"


# Within one tick, frees happen before new starts; the log mirrors that.
_KIND_ORDER = {
    EventKind.SUBMIT: 0,
    EventKind.QUANTUM_RELEASE: 1,
    EventKind.COMPLETE: 2,
    EventKind.START: 3,
    EventKind.QUANTUM_ACQUIRE: 4,
}


@dataclass(frozen=True)
class TraceEvent:
    time: SimTime
    kind: EventKind
    unit_id: str


@dataclass(frozen=True)
class AllocationInterval:
    """A resource held by one unit over [start, end).

    ``busy`` lists the disjoint sub-intervals during which the resource
    actually executes a phase of its own kind; the rest of the allocation
    is idle-but-held time.
    """

    unit_id: str
    resource: str  # "classical:<count>" or "quantum"
    start: SimTime
    end: SimTime
    busy: tuple[tuple[SimTime, SimTime], ...]

    @property
    def is_quantum(self) -> bool:
        return self.resource == QUANTUM_RESOURCE

    @property
    def node_count(self) -> int:
        if self.is_quantum:
            return 0
        return int(self.resource.split(":", 1)[1])

    @property
    def length(self) -> SimTime:
        return self.end - self.start

    @property
    def busy_total(self) -> SimTime:
        return sum(e - s for s, e in self.busy)


@dataclass(frozen=True)
class ScheduleTrace:
    """Immutable record of one simulation run."""

    pool: ResourcePool
    units: tuple[SchedulableUnit, ...]
    events: tuple[TraceEvent, ...]
    allocations: tuple[AllocationInterval, ...]

    @property
    def makespan(self) -> SimTime:
        times = [e.time for e in self.events if e.kind is EventKind.COMPLETE]
        return max(times) if times else 0

    def events_for(self, unit_id: str) -> list[TraceEvent]:
        return [e for e in self.events if e.unit_id == unit_id]


@dataclass(frozen=True)
class PolicyConfig:
    """Queue policy knobs. Only FCFS is implemented; backfill is optional."""

    backfill: bool = True


def units_from_monolithic(workload: WorkloadSpec) -> list[SchedulableUnit]:
    """One full-duration unit per job; the device is held end to end."""
    return [
        SchedulableUnit(
            unit_id=job.job_id,
            parent_job_id=job.job_id,
            classical_nodes=job.classical_nodes,
            phases=job.phases,
            needs_quantum=any(p.is_quantum for p in job.phases),
            quantum_release_offset=None,
            submit_time=job.submit_time,
            depends_on=None,
        )
        for job in workload.jobs
    ]


def units_from_split(plans: Iterable[SplitPlan]) -> list[SchedulableUnit]:
    """One unit per sub-job, chained by dependency, with early release.

    A single-sub-job plan is an unsplit job: it keeps monolithic semantics
    (full-duration quantum hold), since no client/server refactoring
    happened. Multi-sub-job chains release the device at each sub-job's
    release offset, the last one included.
    """
    units: list[SchedulableUnit] = []
    for plan in plans:
        split = len(plan.subjobs) > 1
        for sub in plan.subjobs:
            units.append(
                SchedulableUnit(
                    unit_id=sub.subjob_id,
                    parent_job_id=sub.parent_job_id,
                    classical_nodes=sub.classical_nodes,
                    phases=sub.phases,
                    needs_quantum=sub.needs_quantum,
                    quantum_release_offset=(
                        sub.quantum_release_offset if split else None
                    ),
                    submit_time=plan.submit_time,
                    depends_on=sub.depends_on,
                )
            )
    return units


def _validate_units(
    pool: ResourcePool, units: list[SchedulableUnit]
) -> None:
    by_id: dict[str, SchedulableUnit] = {}
    for unit in units:
        if unit.unit_id in by_id:
            raise DependencyError(f"duplicate unit id '{unit.unit_id}'")
        by_id[unit.unit_id] = unit
    for unit in units:
        if not unit.phases:
            raise UnsatisfiableUnitError(f"unit '{unit.unit_id}': no phases")
        if unit.classical_nodes < 1:
            raise UnsatisfiableUnitError(
                f"unit '{unit.unit_id}': classical_nodes must be >= 1"
            )
        if unit.classical_nodes > pool.classical_nodes:
            raise UnsatisfiableUnitError(
                f"unit '{unit.unit_id}': requests {unit.classical_nodes} "
                f"classical nodes but pool has {pool.classical_nodes}"
            )
        if unit.needs_quantum and pool.quantum_devices < 1:
            raise UnsatisfiableUnitError(
                f"unit '{unit.unit_id}': needs the quantum device but the "
                "pool has none"
            )
        if unit.quantum_release_offset is not None and (
            unit.quantum_release_offset < 0
            or unit.quantum_release_offset > unit.total_duration
        ):
            raise UnsatisfiableUnitError(
                f"unit '{unit.unit_id}': release offset "
                f"{unit.quantum_release_offset} outside [0, duration]"
            )
        if unit.depends_on is not None and unit.depends_on not in by_id:
            raise DependencyError(
                f"unit '{unit.unit_id}': unknown dependency "
                f"'{unit.depends_on}'"
            )
    # Cycle check: follow depends_on chains with a visited set.
    state: dict[str, int] = {}  # 0 = in progress, 1 = done
    for unit in units:
        path = []
        cur: str | None = unit.unit_id
        while cur is not None and cur not in state:
            state[cur] = 0
            path.append(cur)
            cur = by_id[cur].depends_on
        if cur is not None and state[cur] == 0:
            raise DependencyError(f"dependency cycle through '{cur}'")
        for node in path:
            state[node] = 1


def _phase_intervals(
    unit: SchedulableUnit, start: SimTime, kind: PhaseKind
) -> tuple[tuple[SimTime, SimTime], ...]:
    # Contiguous same-kind runs are merged into one busy interval.
    out: list[list[SimTime]] = []
    offset = start
    for phase in unit.phases:
        if phase.kind is kind:
            if out and out[-1][1] == offset:
                out[-1][1] = offset + phase.duration
            else:
                out.append([offset, offset + phase.duration])
        offset += phase.duration
    return tuple((s, e) for s, e in out)


_EV_COMPLETE = 0
_EV_RELEASE = 1
_EV_WAKE = 2


def simulate(
    pool: ResourcePool,
    units: list[SchedulableUnit],
    policy: PolicyConfig | None = None,
) -> ScheduleTrace:
    """Run the co-scheduling simulation and return its full trace.

    Raises UnsatisfiableUnitError or DependencyError on invalid input.
    The function is pure: no global state, no wall clock.
    """
    policy = policy or PolicyConfig()
    _validate_units(pool, units)

    by_id = {u.unit_id: u for u in units}
    dependents: dict[str, list[str]] = {}
    for unit in units:
        if unit.depends_on is not None:
            dependents.setdefault(unit.depends_on, []).append(unit.unit_id)

    free_nodes = pool.classical_nodes
    quantum_free = True
    # Unit lifecycle: waiting (dep not complete) -> queued (with ready time)
    # -> running -> done.
    ready_time: dict[str, SimTime] = {}
    queued: set[str] = set()
    running: set[str] = set()
    start_times: dict[str, SimTime] = {}
    events: list[TraceEvent] = []

    heap: list[tuple[SimTime, int, str]] = []
    for unit in units:
        events.append(TraceEvent(unit.submit_time, EventKind.SUBMIT, unit.unit_id))
        if unit.depends_on is None:
            ready_time[unit.unit_id] = unit.submit_time
            queued.add(unit.unit_id)
            heapq.heappush(heap, (unit.submit_time, _EV_WAKE, unit.unit_id))

    def dispatch(now: SimTime) -> None:
        nonlocal free_nodes, quantum_free
        candidates = sorted(
            (u for u in queued if ready_time[u] <= now),
            key=lambda u: (ready_time[u], by_id[u].submit_time, u),
        )
        for uid in candidates:
            unit = by_id[uid]
            fits = unit.classical_nodes <= free_nodes and (
                not unit.needs_quantum or quantum_free
            )
            if not fits:
                if policy.backfill:
                    continue
                break
            queued.discard(uid)
            running.add(uid)
            start_times[uid] = now
            free_nodes -= unit.classical_nodes
            events.append(TraceEvent(now, EventKind.START, uid))
            if unit.needs_quantum:
                quantum_free = False
                events.append(TraceEvent(now, EventKind.QUANTUM_ACQUIRE, uid))
                heapq.heappush(
                    heap, (now + unit.quantum_hold, _EV_RELEASE, uid)
                )
            heapq.heappush(
                heap, (now + unit.total_duration, _EV_COMPLETE, uid)
            )

    while heap:
        now = heap[0][0]
        # Apply every event at this tick before dispatching: frees first.
        while heap and heap[0][0] == now:
            _, ev, uid = heapq.heappop(heap)
            unit = by_id[uid]
            if ev == _EV_COMPLETE:
                running.discard(uid)
                free_nodes += unit.classical_nodes
                events.append(TraceEvent(now, EventKind.COMPLETE, uid))
                for dep_id in dependents.get(uid, ()):
                    dep = by_id[dep_id]
                    ready_time[dep_id] = max(now, dep.submit_time)
                    queued.add(dep_id)
                    heapq.heappush(
                        heap, (ready_time[dep_id], _EV_WAKE, dep_id)
                    )
            elif ev == _EV_RELEASE:
                quantum_free = True
                events.append(TraceEvent(now, EventKind.QUANTUM_RELEASE, uid))
            # _EV_WAKE only triggers a dispatch pass.
        dispatch(now)

    if len(start_times) != len(units):
        missing = sorted(set(by_id) - set(start_times))
        raise SimulationError(f"units never started: {missing}")

    allocations: list[AllocationInterval] = []
    for unit in sorted(units, key=lambda u: (start_times[u.unit_id], u.unit_id)):
        start = start_times[unit.unit_id]
        allocations.append(
            AllocationInterval(
                unit_id=unit.unit_id,
                resource=f"classical:{unit.classical_nodes}",
                start=start,
                end=start + unit.total_duration,
                busy=_phase_intervals(unit, start, PhaseKind.CLASSICAL),
            )
        )
        if unit.needs_quantum:
            allocations.append(
                AllocationInterval(
                    unit_id=unit.unit_id,
                    resource=QUANTUM_RESOURCE,
                    start=start,
                    end=start + unit.quantum_hold,
                    busy=_phase_intervals(unit, start, PhaseKind.QUANTUM),
                )
            )

    events.sort(key=lambda e: (e.time, _KIND_ORDER[e.kind], e.unit_id))
    return ScheduleTrace(
        pool=pool,
        units=tuple(units),
        events=tuple(events),
        allocations=tuple(allocations),
    )


def write_trace_jsonl(trace: ScheduleTrace, stream: TextIO) -> None:
    """Emit the trace as JSON Lines: events first, then allocations."""
    for event in trace.events:
        stream.write(
            json.dumps(
                {"t": event.time, "kind": event.kind.value, "unit": event.unit_id}
            )
            + "\n"
        )
    for alloc in trace.allocations:
        stream.write(
            json.dumps(
                {
                    "unit": alloc.unit_id,
                    "resource": alloc.resource,
                    "start": alloc.start,
                    "end": alloc.end,
                    "busy": [[s, e] for s, e in alloc.busy],
                }
            )
            + "\n"
        )
