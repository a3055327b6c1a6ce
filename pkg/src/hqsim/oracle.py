"""Exhaustive makespan oracle, independent of the event engine.

The oracle enumerates every precedence-feasible placement order of the
units and, for each order, places units one at a time at the earliest
integer start tick that respects submit times, dependency completion,
classical node capacity, and exclusive quantum-device intervals. This
generates the full set of active schedules; shifting any feasible schedule
left never increases makespan, so an optimal schedule is always among them.
The minimum over all orders is therefore the true optimal makespan.

Instances are capped (few units, short durations) because the search is
factorial; the cap matches what the verification suite needs.
"""

from __future__ import annotations

from itertools import permutations

from hqsim.model import ResourcePool, SimTime
from hqsim.scheduler import SchedulableUnit

MAX_UNITS = 6
MAX_DURATION = 16


class OracleInstanceTooLarge(ValueError):
    """Instance exceeds the exhaustive-search bounds."""


def _feasible_start(
    unit: SchedulableUnit,
    earliest: SimTime,
    horizon: SimTime,
    node_usage: list[int],
    quantum_taken: list[bool],
    pool: ResourcePool,
) -> SimTime:
    duration = unit.total_duration
    hold = unit.quantum_hold
    for start in range(earliest, horizon + 1):
        ok = all(
            node_usage[t] + unit.classical_nodes <= pool.classical_nodes
            for t in range(start, start + duration)
        )
        if ok and unit.needs_quantum:
            ok = not any(quantum_taken[start : start + hold])
        if ok:
            return start
    raise AssertionError("horizon too small for a feasible placement")


def oracle_best_makespan(
    pool: ResourcePool, units: list[SchedulableUnit]
) -> SimTime:
    """Minimal achievable makespan for the given units on the pool.

    Raises OracleInstanceTooLarge beyond the documented bounds and the
    scheduler's validation errors for inherently unsatisfiable input.
    """
    if len(units) > MAX_UNITS:
        raise OracleInstanceTooLarge(
            f"{len(units)} units exceed the oracle cap of {MAX_UNITS}"
        )
    for unit in units:
        if unit.total_duration > MAX_DURATION:
            raise OracleInstanceTooLarge(
                f"unit '{unit.unit_id}' duration {unit.total_duration} "
                f"exceeds the oracle cap of {MAX_DURATION}"
            )
        if unit.classical_nodes > pool.classical_nodes or (
            unit.needs_quantum and pool.quantum_devices < 1
        ):
            raise OracleInstanceTooLarge(
                f"unit '{unit.unit_id}' can never fit the pool"
            )
    if not units:
        return 0

    horizon = max(u.submit_time for u in units) + sum(
        u.total_duration for u in units
    )
    index = {u.unit_id: i for i, u in enumerate(units)}

    best = horizon + 1
    for order in permutations(range(len(units))):
        completes: dict[int, SimTime] = {}
        node_usage = [0] * (horizon + MAX_DURATION + 1)
        quantum_taken = [False] * (horizon + MAX_DURATION + 1)
        makespan = 0
        pruned = False
        for i in order:
            unit = units[i]
            earliest = unit.submit_time
            if unit.depends_on is not None:
                dep = index[unit.depends_on]
                if dep not in completes:
                    pruned = True  # order violates precedence
                    break
                earliest = max(earliest, completes[dep])
            start = _feasible_start(
                unit, earliest, horizon, node_usage, quantum_taken, pool
            )
            completes[i] = start + unit.total_duration
            for t in range(start, start + unit.total_duration):
                node_usage[t] += unit.classical_nodes
            if unit.needs_quantum:
                for t in range(start, start + unit.quantum_hold):
                    quantum_taken[t] = True
            makespan = max(makespan, completes[i])
            if makespan >= best:
                pruned = True  # makespan only grows as units are placed
                break
        if not pruned:
            best = min(best, makespan)
    return best
