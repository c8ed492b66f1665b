"""Reference schedulers under the same machine rules: FCFS, Min-Min, Max-Min."""

from __future__ import annotations

import heapq
from typing import Sequence

from .core import CloudConfig, ResourceInstance, Schedule, ScheduleEntry, Workload
from .jobs import build_jobs, machines


def fcfs_schedule(
    workloads: Sequence[Workload], instances: Sequence[ResourceInstance], config: CloudConfig
) -> Schedule:
    """Workloads in id order; each operation on its lowest-id eligible instance."""
    m = machines(instances, config)
    avail = [0.0] * len(m.ids)
    entries = []
    jobs = build_jobs(sorted(workloads, key=lambda w: w.workload_id), m)
    for job in jobs:
        ready = 0.0
        for op_index, _, elig in job.ops:
            k, dur = elig[0]
            start = max(avail[k], ready)
            ready = avail[k] = start + dur
            entries.append(ScheduleEntry(job.workload.workload_id, op_index, m.ids[k], start, ready))
    return Schedule(tuple(entries))


def _chains(workloads, instances, config):
    m = machines(instances, config)
    return m, build_jobs(sorted(workloads, key=lambda w: w.workload_id), m)


def _best_slot(elig, avail, ready):
    bc = None
    for k, dur in elig:
        a = avail[k]
        s = a if a > ready else ready
        c = s + dur
        if bc is None or c < bc:
            bc, bk, bs = c, k, s
    return bc, bk, bs


def min_min_schedule(workloads, instances, config) -> Schedule:
    """Repeatedly commit the ready operation with the smallest best completion time.

    Candidates are the next unscheduled operation of every workload (ready
    when its predecessor ends), so single-operation bags get classic Min-Min.
    Availability only grows, so a stored completion time is a lower bound;
    stale heap entries are re-scored when they surface.
    """
    m, jobs = _chains(workloads, instances, config)
    avail = [0.0] * len(m.ids)
    touched = [0] * len(m.ids)  # bumps whenever a machine's availability moves
    nxt = [0] * len(jobs)
    ready = [0.0] * len(jobs)
    heap = []

    def push(j):
        c, k, s = _best_slot(jobs[j].ops[nxt[j]][2], avail, ready[j])
        heapq.heappush(heap, (c, j, k, s, touched[k]))

    for j in range(len(jobs)):
        push(j)
    entries = []
    while heap:
        c, j, k, s, stamp = heapq.heappop(heap)
        if stamp != touched[k]:
            push(j)
            continue
        op_index, _, _ = jobs[j].ops[nxt[j]]
        entries.append(ScheduleEntry(jobs[j].workload.workload_id, op_index, m.ids[k], s, c))
        avail[k] = c
        touched[k] += 1
        nxt[j] += 1
        ready[j] = c
        if nxt[j] < len(jobs[j].ops):
            push(j)
    return Schedule(tuple(entries))


def max_min_schedule(workloads, instances, config) -> Schedule:
    """Repeatedly commit the ready operation with the largest best completion time.

    Stored values can only be stale-low here, which the max-heap cannot
    tolerate, so every candidate whose best machine moves is re-scored
    eagerly.
    """
    m, jobs = _chains(workloads, instances, config)
    avail = [0.0] * len(m.ids)
    nxt = [0] * len(jobs)
    ready = [0.0] * len(jobs)
    best: list = [None] * len(jobs)
    version = [0] * len(jobs)
    watchers: list[set[int]] = [set() for _ in m.ids]
    heap = []

    def evaluate(j):
        c, k, s = _best_slot(jobs[j].ops[nxt[j]][2], avail, ready[j])
        if best[j] is not None:
            watchers[best[j][1]].discard(j)
        best[j] = (c, k, s)
        watchers[k].add(j)
        version[j] += 1
        heapq.heappush(heap, (-c, j, version[j]))

    for j in range(len(jobs)):
        evaluate(j)
    entries = []
    while heap:
        _, j, ver = heapq.heappop(heap)
        if ver != version[j]:
            continue
        c, k, s = best[j]
        op_index = jobs[j].ops[nxt[j]][0]
        entries.append(ScheduleEntry(jobs[j].workload.workload_id, op_index, m.ids[k], s, c))
        avail[k] = c
        watchers[k].discard(j)
        best[j] = None
        nxt[j] += 1
        ready[j] = c
        for other in sorted(watchers[k]):
            evaluate(other)
        if nxt[j] < len(jobs[j].ops):
            evaluate(j)
        else:
            version[j] += 1
    return Schedule(tuple(entries))
