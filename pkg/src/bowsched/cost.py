"""ATU billing, the cost x time objective, and its closed forms for plans.

Public instances are billed per started ATU; the private type is owned and
billed pro rata. The objective sums, over instances, billed cost times busy
time.

All loads are summed with :func:`math.fsum`, which is exactly rounded and so
independent of summation order. Two routes that put the same multiset of
workloads on an instance therefore produce bit-identical contributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import Assignment, BagOfWorkloads, CloudConfig, ResourceType
from .errors import PlanInfeasible, UnassignedWorkload


def resource_time(load: float, rtype: ResourceType) -> float:
    """Time for one instance of ``rtype`` to process ``load`` work-units."""
    return load / rtype.speed


def billed_cost(busy: float, rtype: ResourceType, atu_length: float) -> float:
    """Charge for holding an instance for ``busy`` time-units."""
    if busy <= 0:
        return 0.0
    if rtype.is_public:
        return rtype.cost_per_atu * math.ceil(busy / atu_length)
    return rtype.cost_per_atu * (busy / atu_length)


def billed_atus(busy: float, rtype: ResourceType, atu_length: float) -> float:
    if busy <= 0:
        return 0
    if rtype.is_public:
        return math.ceil(busy / atu_length)
    return busy / atu_length


def resource_cost(load: float, rtype: ResourceType, atu_length: float) -> float:
    return billed_cost(resource_time(load, rtype), rtype, atu_length)


def z_contribution(load: float, rtype: ResourceType, atu_length: float) -> float:
    """cost x time of one instance carrying ``load``."""
    t = resource_time(load, rtype)
    return billed_cost(t, rtype, atu_length) * t


def instance_loads(assignment: Assignment, bow: BagOfWorkloads, config: CloudConfig):
    """Per-instance load, after checking the assignment is total and lease-feasible."""
    exec_time = {w.workload_id: w.exec_time for w in bow}
    missing = sorted(set(exec_time) - set(assignment.mapping))
    if missing:
        raise UnassignedWorkload(f"workloads not assigned: {', '.join(missing)}")
    extra = sorted(set(assignment.mapping) - set(exec_time))
    if extra:
        raise UnassignedWorkload(f"assignment names workloads not in the bag: {', '.join(extra)}")
    config.check_instances(assignment.instances)
    by_id = {i.instance_id: i for i in assignment.instances}
    return {
        iid: (by_id[iid].type_id, math.fsum(exec_time[w] for w in wids))
        for iid, wids in assignment.preimage().items()
    }


def objective_z(assignment: Assignment, bow: BagOfWorkloads, config: CloudConfig) -> float:
    loads = instance_loads(assignment, bow, config)
    return math.fsum(
        z_contribution(load, config.type_of(type_id), config.atu_length)
        for type_id, load in loads.values()
    )


def _check_rows(rows: Mapping[str, Sequence], config: CloudConfig) -> None:
    for type_id, per_instance in rows.items():
        try:
            limit = config.type_of(type_id).lease_limit
        except KeyError as exc:
            raise PlanInfeasible(str(exc)) from None
        if len(per_instance) > limit:
            raise PlanInfeasible(
                f"type {type_id!r}: {len(per_instance)} leased instances exceed limit {limit}"
            )


@dataclass(frozen=True)
class EqualLengthPlan:
    """Workload counts per leased instance, for a bag of ``d`` equal workloads.

    ``counts[type_id]`` has one entry per leased instance of that type. A
    plan where every instance of a type carries the same count is the
    balanced form with a single ``q`` per type; see :meth:`balanced`.
    """

    d: int
    counts: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for type_id, qs in self.counts.items():
            qs = tuple(int(q) for q in qs)
            if any(q < 0 for q in qs):
                raise PlanInfeasible(f"type {type_id!r}: negative workload count")
            if qs:
                clean[type_id] = qs
        object.__setattr__(self, "counts", clean)

    @classmethod
    def balanced(cls, d: int, per_type_q: Mapping[str, int], per_type_leased: Mapping[str, int]):
        return cls(d, {t: (per_type_q.get(t, 0),) * n for t, n in per_type_leased.items()})

    @property
    def per_type_leased(self) -> dict[str, int]:
        return {t: len(qs) for t, qs in self.counts.items()}

    @property
    def is_balanced(self) -> bool:
        return all(len(set(qs)) == 1 for qs in self.counts.values())

    @property
    def per_type_q(self) -> dict[str, int]:
        if not self.is_balanced:
            raise ValueError("per-type q is only defined for balanced plans")
        return {t: qs[0] for t, qs in self.counts.items()}

    @property
    def leased(self) -> int:
        return sum(1 for qs in self.counts.values() for q in qs if q)


@dataclass(frozen=True)
class VaryingLengthPlan:
    """Per-leased-instance class-count vectors for a bag with size classes.

    ``rows[type_id][k][a]`` is how many workloads of class ``a`` the k-th
    leased instance of that type runs.
    """

    class_counts: tuple[int, ...]
    rows: Mapping[str, tuple[tuple[int, ...], ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "class_counts", tuple(int(c) for c in self.class_counts))
        width = len(self.class_counts)
        clean = {}
        for type_id, vecs in self.rows.items():
            vecs = tuple(tuple(int(q) for q in v) for v in vecs)
            for v in vecs:
                if len(v) != width:
                    raise PlanInfeasible(f"type {type_id!r}: row {v} has wrong number of classes")
                if any(q < 0 for q in v):
                    raise PlanInfeasible(f"type {type_id!r}: negative workload count")
            if vecs:
                clean[type_id] = vecs
        object.__setattr__(self, "rows", clean)

    @classmethod
    def balanced(
        cls,
        class_counts: Sequence[int],
        per_type_class_q: Mapping[tuple[str, int], int],
        per_type_leased: Mapping[str, int],
    ):
        width = len(class_counts)
        rows = {}
        for t, n in per_type_leased.items():
            vec = tuple(per_type_class_q.get((t, a), 0) for a in range(width))
            rows[t] = (vec,) * n
        return cls(tuple(class_counts), rows)

    @property
    def per_type_leased(self) -> dict[str, int]:
        return {t: len(v) for t, v in self.rows.items()}

    @property
    def is_balanced(self) -> bool:
        return all(len(set(v)) == 1 for v in self.rows.values())

    @property
    def per_type_class_q(self) -> dict[tuple[str, int], int]:
        if not self.is_balanced:
            raise ValueError("per-type class counts are only defined for balanced plans")
        return {(t, a): q for t, v in self.rows.items() for a, q in enumerate(v[0])}

    @property
    def leased(self) -> int:
        return sum(1 for vecs in self.rows.values() for v in vecs if any(v))


def row_load(vec: Sequence[int], sizes: Sequence[float]) -> float:
    return math.fsum(e for q, e in zip(vec, sizes) for _ in range(q))


def equal_length_z(plan: EqualLengthPlan, exec_time: float, config: CloudConfig) -> float:
    _check_rows(plan.counts, config)
    placed = sum(sum(qs) for qs in plan.counts.values())
    if placed != plan.d:
        raise PlanInfeasible(f"plan places {placed} workloads, bag has {plan.d}")
    return math.fsum(
        z_contribution(row_load((q,), (exec_time,)), config.type_of(t), config.atu_length)
        for t, qs in plan.counts.items()
        for q in qs
    )


def varying_length_z(plan: VaryingLengthPlan, sizes: Sequence[float], config: CloudConfig) -> float:
    if len(sizes) != len(plan.class_counts):
        raise PlanInfeasible(
            f"plan has {len(plan.class_counts)} classes but {len(sizes)} sizes were given"
        )
    _check_rows(plan.rows, config)
    for a, want in enumerate(plan.class_counts):
        got = sum(v[a] for vecs in plan.rows.values() for v in vecs)
        if got != want:
            raise PlanInfeasible(f"class {a}: plan places {got} workloads, bag has {want}")
    return math.fsum(
        z_contribution(row_load(v, sizes), config.type_of(t), config.atu_length)
        for t, vecs in plan.rows.items()
        for v in vecs
    )
