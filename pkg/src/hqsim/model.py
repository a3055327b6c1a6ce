"""Domain types for hybrid workloads plus ingestion of workload documents.

Time is abstract: all durations and timestamps are non-negative integer
ticks (``SimTime``). Integer time keeps traces exactly comparable across
runs and lets every expected value in the test suite be computed exactly.

The workload document format is JSON::

    {
      "pool": {"classical_nodes": int, "quantum_devices": 1},
      "checkpoint_overhead": int,            # optional, default 0
      "jobs": [
        {"id": str, "classical_nodes": int, "submit_time": int,
         "phases": [{"kind": "classical"|"quantum", "duration": int,
                     "label": str}]}          # label optional
      ]
    }

Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

SimTime = int


class WorkloadParseError(ValueError):
    """Raised when a workload document is not syntactically usable."""


class ValidationError(ValueError):
    """Raised when a workload violates a model invariant.

    The message names the violated invariant and the offending job/phase.
    """


class PhaseKind(str, Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"


@dataclass(frozen=True)
class Phase:
    """One contiguous execution phase of a job.

    A quantum phase occupies the quantum device; a classical phase runs on
    the job's classical nodes. Durations are at least one tick.
    """

    kind: PhaseKind
    duration: SimTime
    label: str

    @property
    def is_quantum(self) -> bool:
        return self.kind is PhaseKind.QUANTUM


@dataclass(frozen=True)
class JobSpec:
    """A monolithic hybrid job: an ordered phase list plus a node request.

    Invariants (enforced by :func:`validate_job`):
      - phases non-empty, each duration >= 1, labels unique within the job;
      - at least one classical phase;
      - no two quantum phases adjacent;
      - classical_nodes >= 1, submit_time >= 0.
    """

    job_id: str
    phases: tuple[Phase, ...]
    classical_nodes: int = 1
    submit_time: SimTime = 0


@dataclass(frozen=True)
class ResourcePool:
    """Classical partition plus the single dedicated quantum service node."""

    classical_nodes: int
    quantum_devices: int = 1


@dataclass(frozen=True)
class WorkloadSpec:
    """A resource pool, a set of jobs, and the per-split checkpoint cost."""

    pool: ResourcePool
    jobs: tuple[JobSpec, ...]
    checkpoint_overhead: SimTime = 0


def job_total_duration(job: JobSpec) -> SimTime:
    """Total wall ticks of a job: phases execute strictly sequentially."""
    return sum(p.duration for p in job.phases)


def validate_job(job: JobSpec) -> None:
    """Check all JobSpec invariants, raising ValidationError on violation."""
    where = f"job '{job.job_id}'"
    if not isinstance(job.job_id, str) or not job.job_id:
        raise ValidationError("empty job id")
    if not job.phases:
        raise ValidationError(f"{where}: empty phase list")
    if job.classical_nodes < 1:
        raise ValidationError(f"{where}: classical_nodes must be >= 1")
    if job.submit_time < 0:
        raise ValidationError(f"{where}: negative submit_time")
    labels: set[str] = set()
    for idx, phase in enumerate(job.phases):
        if phase.duration < 1:
            raise ValidationError(
                f"{where}: phase '{phase.label}' (index {idx}) has "
                f"non-positive duration {phase.duration}"
            )
        if phase.label in labels:
            raise ValidationError(
                f"{where}: duplicate phase label '{phase.label}'"
            )
        labels.add(phase.label)
    if not any(p.kind is PhaseKind.CLASSICAL for p in job.phases):
        raise ValidationError(f"{where}: no classical phase")
    for idx in range(len(job.phases) - 1):
        if job.phases[idx].is_quantum and job.phases[idx + 1].is_quantum:
            raise ValidationError(
                f"{where}: adjacent quantum phases at indices {idx}-{idx + 1}"
            )


def validate_workload(workload: WorkloadSpec) -> None:
    """Check pool and cross-job invariants, raising ValidationError."""
    if workload.pool.classical_nodes < 1:
        raise ValidationError("pool: classical_nodes must be >= 1")
    if workload.pool.quantum_devices != 1:
        raise ValidationError(
            "pool: quantum_devices must be exactly 1 in this version"
        )
    if workload.checkpoint_overhead < 0:
        raise ValidationError("checkpoint_overhead must be >= 0")
    seen: set[str] = set()
    for job in workload.jobs:
        validate_job(job)
        if job.job_id in seen:
            raise ValidationError(f"duplicate job id '{job.job_id}'")
        seen.add(job.job_id)
        if job.classical_nodes > workload.pool.classical_nodes:
            raise ValidationError(
                f"job '{job.job_id}': requests {job.classical_nodes} classical "
                f"nodes but pool has {workload.pool.classical_nodes}"
            )


_TOP_KEYS = {"pool", "checkpoint_overhead", "jobs"}
_POOL_KEYS = {"classical_nodes", "quantum_devices"}
_JOB_KEYS = {"id", "classical_nodes", "submit_time", "phases"}
_PHASE_KEYS = {"kind", "duration", "label"}


def _require_keys(obj: dict, allowed: set[str], what: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise WorkloadParseError(
            f"{what}: unknown key(s) {sorted(unknown)}"
        )


def _as_int(value: object, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise WorkloadParseError(f"{what}: expected an integer, got {value!r}")
    return value


def _parse_phase(obj: object, job_id: str, idx: int) -> Phase:
    what = f"job '{job_id}' phase {idx}"
    if not isinstance(obj, dict):
        raise WorkloadParseError(f"{what}: expected an object")
    _require_keys(obj, _PHASE_KEYS, what)
    try:
        kind = PhaseKind(obj["kind"])
    except (KeyError, ValueError):
        raise WorkloadParseError(
            f"{what}: kind must be 'classical' or 'quantum'"
        ) from None
    duration = _as_int(obj.get("duration"), f"{what} duration")
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise WorkloadParseError(f"{what}: label must be a string")
    return Phase(kind=kind, duration=duration, label=label)


def _autolabel(phases: list[Phase]) -> list[Phase]:
    # Fill in missing labels as C1, Q1, C2, ... (per-kind counters).
    counters = {PhaseKind.CLASSICAL: 0, PhaseKind.QUANTUM: 0}
    out = []
    for phase in phases:
        counters[phase.kind] += 1
        if phase.label:
            out.append(phase)
        else:
            letter = "C" if phase.kind is PhaseKind.CLASSICAL else "Q"
            out.append(replace(phase, label=f"{letter}{counters[phase.kind]}"))
    return out


def _parse_job(obj: object, idx: int) -> JobSpec:
    if not isinstance(obj, dict):
        raise WorkloadParseError(f"jobs[{idx}]: expected an object")
    _require_keys(obj, _JOB_KEYS, f"jobs[{idx}]")
    job_id = obj.get("id")
    if not isinstance(job_id, str) or not job_id:
        raise WorkloadParseError(f"jobs[{idx}]: missing or empty 'id'")
    raw_phases = obj.get("phases")
    if not isinstance(raw_phases, list):
        raise WorkloadParseError(f"job '{job_id}': 'phases' must be a list")
    phases = _autolabel(
        [_parse_phase(p, job_id, i) for i, p in enumerate(raw_phases)]
    )
    return JobSpec(
        job_id=job_id,
        phases=tuple(phases),
        classical_nodes=_as_int(
            obj.get("classical_nodes", 1), f"job '{job_id}' classical_nodes"
        ),
        submit_time=_as_int(
            obj.get("submit_time", 0), f"job '{job_id}' submit_time"
        ),
    )


def load_workload(document: str | bytes) -> WorkloadSpec:
    """Parse and validate a workload document.

    Raises WorkloadParseError for malformed documents and ValidationError
    when a model invariant is violated.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise WorkloadParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise WorkloadParseError("top level must be an object")
    _require_keys(data, _TOP_KEYS, "workload")
    pool_obj = data.get("pool")
    if not isinstance(pool_obj, dict):
        raise WorkloadParseError("missing 'pool' object")
    _require_keys(pool_obj, _POOL_KEYS, "pool")
    pool = ResourcePool(
        classical_nodes=_as_int(
            pool_obj.get("classical_nodes"), "pool classical_nodes"
        ),
        quantum_devices=_as_int(
            pool_obj.get("quantum_devices", 1), "pool quantum_devices"
        ),
    )
    jobs_obj = data.get("jobs")
    if not isinstance(jobs_obj, list):
        raise WorkloadParseError("missing 'jobs' list")
    workload = WorkloadSpec(
        pool=pool,
        jobs=tuple(_parse_job(j, i) for i, j in enumerate(jobs_obj)),
        checkpoint_overhead=_as_int(
            data.get("checkpoint_overhead", 0), "checkpoint_overhead"
        ),
    )
    validate_workload(workload)
    return workload


def workload_to_dict(workload: WorkloadSpec) -> dict:
    return {
        "pool": {
            "classical_nodes": workload.pool.classical_nodes,
            "quantum_devices": workload.pool.quantum_devices,
        },
        "checkpoint_overhead": workload.checkpoint_overhead,
        "jobs": [
            {
                "id": job.job_id,
                "classical_nodes": job.classical_nodes,
                "submit_time": job.submit_time,
                "phases": [
                    {
                        "kind": p.kind.value,
                        "duration": p.duration,
                        "label": p.label,
                    }
                    for p in job.phases
                ],
            }
            for job in workload.jobs
        ],
    }


def serialize_workload(workload: WorkloadSpec) -> str:
    """Inverse of load_workload: load_workload(serialize_workload(w)) == w."""
    return json.dumps(workload_to_dict(workload), indent=2) + "\n"
