"""Flattened operation tables shared by the list schedulers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .core import CloudConfig, ResourceInstance, Workload, check_distinct_ids
from .errors import NoEligibleResource


@dataclass
class Machines:
    ids: list[str]  # sorted, so index order is id order
    speed: list[float]


@dataclass(frozen=True)
class Job:
    workload: Workload
    # per operation: (op_index, base_time, ((machine index, duration), ...)) by machine id
    ops: tuple[tuple[int, float, tuple[tuple[int, float], ...]], ...]


def machines(instances: Sequence[ResourceInstance], config: CloudConfig) -> Machines:
    config.check_instances(instances)
    ordered = sorted(instances, key=lambda i: i.instance_id)
    return Machines(
        ids=[i.instance_id for i in ordered],
        speed=[config.type_of(i.type_id).speed for i in ordered],
    )


def build_jobs(workloads: Sequence[Workload], m: Machines) -> list[Job]:
    check_distinct_ids(workloads)
    return list(_build_jobs(tuple(workloads), tuple(m.ids), tuple(m.speed)))


# one scenario is usually run through several schedulers in a row
@lru_cache(maxsize=8)
def _build_jobs(workloads, ids, speed) -> tuple[Job, ...]:
    index = {iid: k for k, iid in enumerate(ids)}
    known = frozenset(index)
    jobs = []
    for w in workloads:
        ops = []
        for op in w.job_operations(ids):
            elig = sorted(map(index.__getitem__, op.eligible_resources & known))
            if not elig:
                raise NoEligibleResource(
                    f"workload {w.workload_id!r} op {op.op_index}: none of its eligible "
                    "resources is among the given instances"
                )
            base = op.base_time
            ops.append((op.op_index, base, tuple((k, base / speed[k]) for k in elig)))
        jobs.append(Job(w, tuple(ops)))
    return tuple(jobs)
