"""Replay a schedule against the machine rules and compute its metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    CloudConfig,
    InstanceMetrics,
    MetricsReport,
    ResourceInstance,
    Schedule,
    ScheduleEntry,
    Workload,
    WorkloadStats,
)
from .cost import billed_atus, billed_cost
from .errors import InvalidSchedule

OVERLAP = "overlap"
PRECEDENCE = "precedence"
DURATION = "duration-mismatch"
NEGATIVE_TIME = "negative-time"
UNKNOWN = "unknown-reference"
DUPLICATE = "duplicate"
MISSING = "missing"
INELIGIBLE = "ineligible"

_REL_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    kind: str
    entries: tuple[ScheduleEntry, ...]
    description: str


def _slack(t: float) -> float:
    # absolute tolerance for comparing timestamps of this magnitude
    return 1e-12 * (t if t > 1.0 else 1.0)


def validate_schedule(
    schedule: Schedule,
    workloads: Iterable[Workload],
    instances: Sequence[ResourceInstance],
    config: CloudConfig,
) -> list[Violation]:
    """Every rule the schedule breaks; an empty list means it is valid."""
    out: list[Violation] = []
    inst_by_id = {i.instance_id: i for i in instances}
    speed = {i.instance_id: config.type_of(i.type_id).speed for i in instances}
    all_ids = sorted(inst_by_id)
    ops = {}
    for w in workloads:
        for op in w.job_operations(all_ids):
            ops[(w.workload_id, op.op_index)] = op

    seen: dict[tuple[str, int], ScheduleEntry] = {}
    placed: list[ScheduleEntry] = []
    for e in schedule.entries:
        key = (e.workload_id, e.op_index)
        op = ops.get(key)
        inst = inst_by_id.get(e.instance_id)
        if op is None or inst is None:
            what = "operation" if op is None else "instance"
            out.append(Violation(UNKNOWN, (e,), f"{key} on {e.instance_id!r}: unknown {what}"))
            continue
        if key in seen:
            out.append(Violation(DUPLICATE, (seen[key], e), f"{key} scheduled more than once"))
            continue
        seen[key] = e
        placed.append(e)
        if e.start < 0:
            out.append(Violation(NEGATIVE_TIME, (e,), f"{key} starts at {e.start!r} < 0"))
        if e.instance_id not in op.eligible_resources:
            out.append(Violation(INELIGIBLE, (e,), f"{key} is not eligible on {e.instance_id!r}"))
        want = op.base_time / speed[e.instance_id]
        got = e.end - e.start
        if abs(got - want) > max(_REL_TOL * want, _slack(e.end)):
            out.append(
                Violation(DURATION, (e,), f"{key} lasts {got!r} on {e.instance_id!r}, expected {want!r}")
            )

    for key in sorted(set(ops) - set(seen)):
        out.append(Violation(MISSING, (), f"{key} is never scheduled"))

    per_instance: dict[str, list[ScheduleEntry]] = {}
    for e in placed:
        per_instance.setdefault(e.instance_id, []).append(e)
    for iid in sorted(per_instance):
        row = sorted(per_instance[iid], key=lambda e: (e.start, e.end))
        for a, b in zip(row, row[1:]):
            if b.start < a.end - _slack(a.end):
                out.append(
                    Violation(
                        OVERLAP,
                        (a, b),
                        f"{iid!r}: [{a.start}, {a.end}] overlaps [{b.start}, {b.end}]",
                    )
                )

    chains: dict[str, list[ScheduleEntry]] = {}
    for e in placed:
        chains.setdefault(e.workload_id, []).append(e)
    for wid in sorted(chains):
        chain = sorted(chains[wid], key=lambda e: e.op_index)
        for a, b in zip(chain, chain[1:]):
            if b.start < a.end - _slack(a.end):
                out.append(
                    Violation(
                        PRECEDENCE,
                        (a, b),
                        f"{wid!r}: op {b.op_index} starts at {b.start} before op {a.op_index} ends at {a.end}",
                    )
                )
    return out


def compute_metrics(
    schedule: Schedule,
    workloads: Iterable[Workload],
    instances: Sequence[ResourceInstance],
    config: CloudConfig,
    *,
    validate: bool = True,
) -> MetricsReport:
    """Busy time, billing, objective and per-workload figures of a valid schedule.

    Each used instance is leased from its first start to its last end and
    billed over that whole span, idle gaps included. Busy time is the work
    it ran divided by its speed.
    """
    workloads = list(workloads)
    if validate:
        problems = validate_schedule(schedule, workloads, instances, config)
        if problems:
            raise InvalidSchedule(problems)
    inst_type = {i.instance_id: config.type_of(i.type_id) for i in instances}
    all_ids = sorted(inst_type)
    base = {
        (w.workload_id, op.op_index): op.base_time
        for w in workloads
        for op in w.job_operations(all_ids)
    }

    per_instance = {}
    for iid, row in schedule.by_instance().items():
        rtype = inst_type[iid]
        busy = math.fsum(base[(e.workload_id, e.op_index)] for e in row) / rtype.speed
        span = max(e.end for e in row) - min(e.start for e in row)
        if span <= busy * (1 + _REL_TOL):
            # gap-free up to float noise; bill exactly the busy time
            span = busy
        cost = billed_cost(span, rtype, config.atu_length)
        per_instance[iid] = InstanceMetrics(
            busy_time=busy,
            atus_billed=billed_atus(span, rtype, config.atu_length),
            cost=cost,
            z_contribution=cost * busy,
        )

    per_workload = {}
    due = {w.workload_id: w.delivery_date for w in workloads}
    for e in schedule.entries:
        cur = per_workload.get(e.workload_id)
        if cur is None:
            per_workload[e.workload_id] = [e.start, e.end]
        else:
            cur[0] = min(cur[0], e.start)
            cur[1] = max(cur[1], e.end)
    stats = {
        wid: WorkloadStats(
            start=s, completion=c, flow_time=c - s, lateness=max(0.0, c - due.get(wid, math.inf))
        )
        for wid, (s, c) in sorted(per_workload.items())
    }

    total_cost = math.fsum(m.cost for m in per_instance.values())
    n = len(workloads)
    return MetricsReport(
        per_instance=dict(sorted(per_instance.items())),
        makespan=schedule.makespan,
        total_cost=total_cost,
        objective_z=math.fsum(m.z_contribution for m in per_instance.values()),
        mean_exec_time=math.fsum(s.flow_time for s in stats.values()) / len(stats) if stats else 0.0,
        cost_per_workload=total_cost / n if n else 0.0,
        per_workload=stats,
    )


def bow_schedule(assignment, bow, config: CloudConfig) -> Schedule:
    """Pack each instance's workloads back to back from time 0 (id order)."""
    speed = {i.instance_id: config.type_of(i.type_id).speed for i in assignment.instances}
    exec_time = {w.workload_id: w.exec_time for w in bow}
    entries = []
    for iid, wids in sorted(assignment.preimage().items()):
        t = 0.0
        for wid in wids:
            end = t + exec_time[wid] / speed[iid]
            entries.append(ScheduleEntry(wid, 0, iid, t, end))
            t = end
    return Schedule(tuple(entries))
