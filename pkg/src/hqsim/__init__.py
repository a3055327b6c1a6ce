"""hqsim: co-scheduling simulator and toolkit for hybrid classical-quantum jobs.

A hybrid job alternates classical compute phases with short quantum-device
phases. Holding a dedicated quantum device for the whole job wastes device
time; splitting the job into a dependency chain of sub-jobs, each owning a
single quantum block and releasing the device right after it, lets several
jobs interleave on one device. This package models both execution styles
with a deterministic discrete-event simulator, quantifies the idle-time and
makespan difference, emulates the client/server early-release protocol, and
emits the corresponding batch scripts.
"""

from hqsim.model import (
    JobSpec,
    Phase,
    PhaseKind,
    ResourcePool,
    ValidationError,
    WorkloadParseError,
    WorkloadSpec,
    job_total_duration,
    load_workload,
    serialize_workload,
)
from hqsim.splitter import SplitPlan, SubJob, reassemble, split_job, split_workload
from hqsim.scheduler import (
    AllocationInterval,
    PolicyConfig,
    SchedulableUnit,
    ScheduleTrace,
    TraceEvent,
    simulate,
    units_from_monolithic,
    units_from_split,
)
from hqsim.oracle import oracle_best_makespan
from hqsim.metrics import ComparisonReport, MetricsReport, compare, compute_metrics

__version__ = "0.1.0"

__all__ = [
    "AllocationInterval",
    "ComparisonReport",
    "JobSpec",
    "MetricsReport",
    "Phase",
    "PhaseKind",
    "PolicyConfig",
    "ResourcePool",
    "SchedulableUnit",
    "ScheduleTrace",
    "SplitPlan",
    "SubJob",
    "TraceEvent",
    "ValidationError",
    "WorkloadParseError",
    "WorkloadSpec",
    "compare",
    "compute_metrics",
    "job_total_duration",
    "load_workload",
    "oracle_best_makespan",
    "reassemble",
    "serialize_workload",
    "simulate",
    "split_job",
    "split_workload",
    "units_from_monolithic",
    "units_from_split",
]
