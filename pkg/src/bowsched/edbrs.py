"""Urgency-driven batch scheduler: four-key sort, delivery-date batches, dispatch.

Workloads are ordered by delivery date, then required amount, total
processing time and operation count. Fixed-width delivery-date windows turn
the sorted list into batches, and every operation is placed where it can
start soonest.

Dispatch rule, for an operation ready at ``t_ready``:

* first operation of a workload: the eligible instance giving the earliest
  start; ties go to the instance that has been idle the longest.
* later operations: the earliest start ``max(avail, t_ready)``. An instance
  already idle at ``t_ready`` (case A/B) starts it immediately; among those
  the one with the shortest idle wait (``t_ready - avail``) wins. If none is
  idle, the operation waits for the instance that frees up first (case C).
* remaining ties go to the lowest instance id.

A batch cannot start before the previous batch's last operation was
dispatched (its start time), so earlier delivery windows claim machines first
without leaving them idle until the previous batch completes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .core import (
    CloudConfig,
    MetricsReport,
    ResourceInstance,
    Schedule,
    ScheduleEntry,
    Workload,
    check_distinct_ids,
)
from .jobs import build_jobs, machines
from .sim import compute_metrics


@dataclass(frozen=True, order=True)
class SortKey:
    delivery_date: float
    required_amount: float
    total_processing_time: float
    operation_count: int
    workload_id: str

    @classmethod
    def of(cls, w: Workload, *, amount_desc=True, time_asc=True, ops_asc=True) -> "SortKey":
        """Key whose natural order is the dispatch priority (smaller first)."""
        return cls(
            w.delivery_date,
            -w.required_amount if amount_desc else w.required_amount,
            w.total_processing_time if time_asc else -w.total_processing_time,
            w.operation_count if ops_asc else -w.operation_count,
            w.workload_id,
        )


def sort_workloads(
    workloads: Sequence[Workload], *, amount_desc=True, time_asc=True, ops_asc=True
) -> list[Workload]:
    check_distinct_ids(workloads)
    return sorted(
        workloads,
        key=lambda w: SortKey.of(w, amount_desc=amount_desc, time_asc=time_asc, ops_asc=ops_asc),
    )


@dataclass(frozen=True)
class Batch:
    index: int
    workloads: tuple[Workload, ...]
    release_time: float = 0.0


def partition_batches(sorted_workloads: Sequence[Workload], window: float) -> list[Batch]:
    """Group by delivery-date window ``[k*window, (k+1)*window)``; order is kept.

    Release times are only known once earlier batches are dispatched, so the
    batches returned here carry 0.0; :func:`dispatch` fills them in.
    """
    if not window > 0:
        raise ValueError("batch window must be > 0")
    groups: dict[int, list[Workload]] = {}
    for w in sorted_workloads:
        groups.setdefault(math.floor(w.delivery_date / window), []).append(w)
    return [Batch(k, tuple(groups[k])) for k in sorted(groups)]


def dispatch_with_releases(
    batches: Sequence[Batch], instances: Sequence[ResourceInstance], config: CloudConfig
) -> tuple[Schedule, list[Batch]]:
    """Dispatch and also return the batches with their actual release times."""
    m = machines(instances, config)
    ids = m.ids
    avail = [0.0] * len(ids)
    entries = []
    released = []
    release = 0.0
    jobs = iter(build_jobs([w for b in batches for w in b.workloads], m))
    for batch in batches:
        released.append(Batch(batch.index, batch.workloads, release))
        marker = None
        for job in itertools.islice(jobs, len(batch.workloads)):
            wid = job.workload.workload_id
            prev_end = None
            for op_index, _, elig in job.ops:
                best = -1
                if prev_end is None:
                    for k, dur in elig:
                        a = avail[k]
                        s = a if a > release else release
                        if best < 0 or s < bs or (s == bs and a < ba):
                            best, bs, ba, bdur = k, s, a, dur
                else:
                    ready = prev_end if prev_end > release else release
                    for k, dur in elig:
                        a = avail[k]
                        if a <= ready:
                            s, wait = ready, ready - a
                        else:
                            s, wait = a, 0.0
                        if best < 0 or s < bs or (s == bs and wait < bw):
                            best, bs, bw, bdur = k, s, wait, dur
                end = bs + bdur
                avail[best] = end
                entries.append(ScheduleEntry(wid, op_index, ids[best], bs, end))
                prev_end = end
                marker = bs
        if marker is not None and marker > release:
            release = marker
    return Schedule(tuple(entries)), released


def dispatch(
    batches: Sequence[Batch], instances: Sequence[ResourceInstance], config: CloudConfig
) -> Schedule:
    return dispatch_with_releases(batches, instances, config)[0]


def schedule(
    workloads: Sequence[Workload],
    instances: Sequence[ResourceInstance],
    config: CloudConfig,
    window: float | None = None,
) -> tuple[Schedule, MetricsReport]:
    """Sort, batch, dispatch, then validate and measure."""
    window = config.atu_length if window is None else window
    ordered = sort_workloads(workloads)
    sched = dispatch(partition_batches(ordered, window), instances, config)
    return sched, compute_metrics(sched, workloads, instances, config)
