"""Split a monolithic hybrid job into a dependency chain of sub-jobs.

Each sub-job owns at most one quantum block. The cut point is immediately
before every quantum phase except the first, so each sub-job front-loads
its quantum block and can release the device as early as possible; classical
work between two quantum blocks stays with the earlier sub-job, and trailing
classical work stays in the last sub-job.

Checkpoint/restart cost is modeled as symmetric classical padding: when the
per-boundary overhead ``eps`` is positive, a checkpoint phase Classical(eps)
is appended to every sub-job except the last and a restart phase
Classical(eps) is prepended to every sub-job except the first.

A job with zero or one quantum block is not worth splitting: the plan holds
a single sub-job identical to the parent (no padding, whatever ``eps``), and
downstream scheduling treats it exactly like the monolithic job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from hqsim.model import (
    JobSpec,
    Phase,
    PhaseKind,
    ResourcePool,
    SimTime,
    WorkloadParseError,
    WorkloadSpec,
    validate_job,
)

CHECKPOINT_LABEL_PREFIX = "ckpt:"
RESTART_LABEL_PREFIX = "restart:"


class SplitStructureError(ValueError):
    """Raised when a plan's padding phases cannot be identified."""


@dataclass(frozen=True)
class SubJob:
    """A schedulable fragment of a parent job.

    ``quantum_release_offset`` is the tick offset from sub-job start at
    which the quantum device can be released: the sum of phase durations up
    to and including the sub-job's quantum phase. It is None for sub-jobs
    without a quantum phase.
    """

    subjob_id: str
    parent_job_id: str
    phases: tuple[Phase, ...]
    classical_nodes: int
    depends_on: str | None
    needs_quantum: bool
    quantum_release_offset: SimTime | None

    @property
    def total_duration(self) -> SimTime:
        return sum(p.duration for p in self.phases)


@dataclass(frozen=True)
class SplitPlan:
    """An ordered chain of sub-jobs reproducing one parent job."""

    parent_job_id: str
    subjobs: tuple[SubJob, ...]
    checkpoint_overhead: SimTime
    submit_time: SimTime = 0


def _release_offset(phases: tuple[Phase, ...]) -> SimTime | None:
    acc = 0
    for phase in phases:
        acc += phase.duration
        if phase.is_quantum:
            return acc
    return None


def split_job(job: JobSpec, eps: SimTime = 0) -> SplitPlan:
    """Cut ``job`` into a chain of sub-jobs, one quantum block each."""
    validate_job(job)
    if eps < 0:
        raise ValueError("checkpoint overhead must be >= 0")

    quantum_positions = [i for i, p in enumerate(job.phases) if p.is_quantum]
    if len(quantum_positions) <= 1:
        # Nothing to split: the plan is the job itself, unpadded.
        sub = SubJob(
            subjob_id=f"{job.job_id}_1",
            parent_job_id=job.job_id,
            phases=job.phases,
            classical_nodes=job.classical_nodes,
            depends_on=None,
            needs_quantum=bool(quantum_positions),
            quantum_release_offset=_release_offset(job.phases),
        )
        return SplitPlan(
            parent_job_id=job.job_id,
            subjobs=(sub,),
            checkpoint_overhead=eps,
            submit_time=job.submit_time,
        )

    # Cut immediately before each quantum phase except the first.
    cuts = [0] + quantum_positions[1:] + [len(job.phases)]
    segments = [
        list(job.phases[cuts[k] : cuts[k + 1]]) for k in range(len(cuts) - 1)
    ]

    subjobs: list[SubJob] = []
    last = len(segments) - 1
    for k, segment in enumerate(segments):
        subjob_id = f"{job.job_id}_{k + 1}"
        if eps > 0 and k > 0:
            segment.insert(
                0,
                Phase(
                    kind=PhaseKind.CLASSICAL,
                    duration=eps,
                    label=f"{RESTART_LABEL_PREFIX}{subjob_id}",
                ),
            )
        if eps > 0 and k < last:
            segment.append(
                Phase(
                    kind=PhaseKind.CLASSICAL,
                    duration=eps,
                    label=f"{CHECKPOINT_LABEL_PREFIX}{subjob_id}",
                )
            )
        phases = tuple(segment)
        subjobs.append(
            SubJob(
                subjob_id=subjob_id,
                parent_job_id=job.job_id,
                phases=phases,
                classical_nodes=job.classical_nodes,
                depends_on=subjobs[-1].subjob_id if subjobs else None,
                needs_quantum=True,
                quantum_release_offset=_release_offset(phases),
            )
        )

    return SplitPlan(
        parent_job_id=job.job_id,
        subjobs=tuple(subjobs),
        checkpoint_overhead=eps,
        submit_time=job.submit_time,
    )


def _is_padding(phase: Phase, prefix: str, eps: SimTime) -> bool:
    return (
        phase.kind is PhaseKind.CLASSICAL
        and phase.duration == eps
        and phase.label.startswith(prefix)
    )


def reassemble(plan: SplitPlan) -> tuple[Phase, ...]:
    """Recover the parent phase list: strip padding and concatenate.

    Raises SplitStructureError if an expected checkpoint/restart phase is
    missing or malformed.
    """
    eps = plan.checkpoint_overhead
    last = len(plan.subjobs) - 1
    out: list[Phase] = []
    for k, sub in enumerate(plan.subjobs):
        phases = list(sub.phases)
        if eps > 0 and last > 0:
            if k > 0:
                if not phases or not _is_padding(
                    phases[0], RESTART_LABEL_PREFIX, eps
                ):
                    raise SplitStructureError(
                        f"sub-job '{sub.subjob_id}': expected a leading "
                        f"restart phase of duration {eps}"
                    )
                phases = phases[1:]
            if k < last:
                if not phases or not _is_padding(
                    phases[-1], CHECKPOINT_LABEL_PREFIX, eps
                ):
                    raise SplitStructureError(
                        f"sub-job '{sub.subjob_id}': expected a trailing "
                        f"checkpoint phase of duration {eps}"
                    )
                phases = phases[:-1]
        out.extend(phases)
    return tuple(out)


def split_workload(workload: WorkloadSpec) -> list[SplitPlan]:
    """Split every job of the workload with its checkpoint overhead."""
    return [
        split_job(job, workload.checkpoint_overhead) for job in workload.jobs
    ]


# ---------------------------------------------------------------------------
# Plan document (JSON) — mirrors the workload schema plus the split fields.

def plans_to_dict(pool: ResourcePool, plans: list[SplitPlan]) -> dict:
    return {
        "pool": {
            "classical_nodes": pool.classical_nodes,
            "quantum_devices": pool.quantum_devices,
        },
        "plans": [
            {
                "parent_job_id": plan.parent_job_id,
                "submit_time": plan.submit_time,
                "checkpoint_overhead": plan.checkpoint_overhead,
                "subjobs": [
                    {
                        "id": sub.subjob_id,
                        "parent": sub.parent_job_id,
                        "classical_nodes": sub.classical_nodes,
                        "depends_on": sub.depends_on,
                        "needs_quantum": sub.needs_quantum,
                        "quantum_release_offset": sub.quantum_release_offset,
                        "phases": [
                            {
                                "kind": p.kind.value,
                                "duration": p.duration,
                                "label": p.label,
                            }
                            for p in sub.phases
                        ],
                    }
                    for sub in plan.subjobs
                ],
            }
            for plan in plans
        ],
    }


def serialize_plans(pool: ResourcePool, plans: list[SplitPlan]) -> str:
    return json.dumps(plans_to_dict(pool, plans), indent=2) + "\n"


def load_plans(document: str | bytes) -> tuple[ResourcePool, list[SplitPlan]]:
    """Parse a plan document produced by serialize_plans."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise WorkloadParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or "plans" not in data or "pool" not in data:
        raise WorkloadParseError("plan document must contain 'pool' and 'plans'")
    pool_obj = data["pool"]
    pool = ResourcePool(
        classical_nodes=int(pool_obj["classical_nodes"]),
        quantum_devices=int(pool_obj.get("quantum_devices", 1)),
    )
    plans = []
    for plan_obj in data["plans"]:
        subjobs = tuple(
            SubJob(
                subjob_id=s["id"],
                parent_job_id=s["parent"],
                phases=tuple(
                    Phase(
                        kind=PhaseKind(p["kind"]),
                        duration=int(p["duration"]),
                        label=p.get("label", ""),
                    )
                    for p in s["phases"]
                ),
                classical_nodes=int(s["classical_nodes"]),
                depends_on=s.get("depends_on"),
                needs_quantum=bool(s["needs_quantum"]),
                quantum_release_offset=s.get("quantum_release_offset"),
            )
            for s in plan_obj["subjobs"]
        )
        plans.append(
            SplitPlan(
                parent_job_id=plan_obj["parent_job_id"],
                subjobs=subjobs,
                checkpoint_overhead=int(plan_obj.get("checkpoint_overhead", 0)),
                submit_time=int(plan_obj.get("submit_time", 0)),
            )
        )
    return pool, plans
