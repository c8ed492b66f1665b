"""Domain types for the multi-cloud bag-of-workloads model.

Everything here is immutable. Construction runs the invariant checks and
raises :class:`~bowsched.errors.InvalidModel` on violation, so downstream
code never sees a malformed object.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateWorkloadId, EmptyBag, InvalidModel, LeaseLimitExceeded

PUBLIC = "public"
PRIVATE = "private"

_REL_TOL = 1e-9


def _resource_type_violations(type_id, kind, speed, cost, lease) -> list[str]:
    out = []
    tag = f"type {type_id!r}: "
    if kind not in (PUBLIC, PRIVATE):
        out.append(tag + f"kind must be 'public' or 'private', got {kind!r}")
    if not isinstance(speed, (int, float)) or not speed > 0:
        out.append(tag + "speed must be > 0")
    if not isinstance(cost, (int, float)) or not cost >= 0:
        out.append(tag + "cost_per_atu must be >= 0")
    if not isinstance(lease, int) or isinstance(lease, bool) or lease < 0:
        out.append(tag + "lease_limit must be a non-negative integer")
    return out


@dataclass(frozen=True)
class ResourceType:
    type_id: str
    kind: str
    speed: float
    cost_per_atu: float
    lease_limit: int

    def __post_init__(self):
        problems = _resource_type_violations(
            self.type_id, self.kind, self.speed, self.cost_per_atu, self.lease_limit
        )
        if problems:
            raise InvalidModel(problems)

    @property
    def is_public(self) -> bool:
        return self.kind == PUBLIC

    def to_dict(self) -> dict:
        return {
            "type_id": self.type_id,
            "kind": self.kind,
            "speed": self.speed,
            "cost_per_atu": self.cost_per_atu,
            "lease_limit": self.lease_limit,
        }


@dataclass(frozen=True)
class ResourceInstance:
    instance_id: str
    type_id: str


def _config_violations(types: Sequence[Mapping], atu_length) -> list[str]:
    out = []
    for t in types:
        out.extend(
            _resource_type_violations(
                t.get("type_id"),
                t.get("kind"),
                t.get("speed"),
                t.get("cost_per_atu"),
                t.get("lease_limit"),
            )
        )
    ids = [t.get("type_id") for t in types]
    dupes = sorted({str(i) for i, n in Counter(ids).items() if n > 1})
    if dupes:
        out.append(f"type_ids must be distinct (repeated: {', '.join(dupes)})")
    n_private = sum(1 for t in types if t.get("kind") == PRIVATE)
    if n_private != 1:
        out.append(f"exactly one private type required, found {n_private}")
    if not isinstance(atu_length, (int, float)) or not atu_length > 0:
        out.append("atu_length must be > 0")
    return out


def validate_config(config) -> list[str]:
    """Return every violated cloud-config invariant as a readable message.

    Accepts a :class:`CloudConfig` or the raw mapping form used in scenario
    files (``{"atu_length": .., "types": [{..., "kind": ...}, ...]}``). An
    empty list means the config is well formed.
    """
    if isinstance(config, CloudConfig):
        return _config_violations([t.to_dict() for t in config.types], config.atu_length)
    types = list(config.get("types", []))
    if "public_types" in config or "private_type" in config:
        types = [dict(t, kind=t.get("kind", PUBLIC)) for t in config.get("public_types", [])]
        priv = config.get("private_type")
        privs = priv if isinstance(priv, list) else ([priv] if priv else [])
        types += [dict(t, kind=t.get("kind", PRIVATE)) for t in privs]
    return _config_violations(types, config.get("atu_length", 1.0))


@dataclass(frozen=True)
class CloudConfig:
    """Public types (ordered), the single private type, and the ATU length."""

    public_types: tuple[ResourceType, ...]
    private_type: ResourceType
    atu_length: float = 1.0
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "public_types", tuple(self.public_types))
        problems = _config_violations(
            [t.to_dict() for t in self.types], self.atu_length
        )
        problems += [
            f"type {t.type_id!r}: listed as public but kind is {t.kind!r}"
            for t in self.public_types
            if t.kind != PUBLIC
        ]
        if problems:
            raise InvalidModel(problems)
        object.__setattr__(self, "_by_id", {t.type_id: t for t in self.types})

    @property
    def types(self) -> tuple[ResourceType, ...]:
        return self.public_types + (self.private_type,)

    def type_of(self, type_id: str) -> ResourceType:
        try:
            return self._by_id[type_id]
        except KeyError:
            raise KeyError(f"unknown resource type {type_id!r}") from None

    def instances(self) -> tuple[ResourceInstance, ...]:
        """Every leasable instance: ``lease_limit`` machines per type."""
        out = []
        for t in self.types:
            width = len(str(max(t.lease_limit - 1, 0)))
            out.extend(
                ResourceInstance(f"{t.type_id}-{k:0{width}d}", t.type_id)
                for k in range(t.lease_limit)
            )
        return tuple(out)

    def check_instances(self, instances: Iterable[ResourceInstance]) -> None:
        """Raise LeaseLimitExceeded if any type has more instances than its limit."""
        counts = Counter()
        seen = set()
        for inst in instances:
            if inst.instance_id in seen:
                raise InvalidModel(f"duplicate instance id {inst.instance_id!r}")
            seen.add(inst.instance_id)
            self.type_of(inst.type_id)
            counts[inst.type_id] += 1
        for type_id, n in counts.items():
            limit = self.type_of(type_id).lease_limit
            if n > limit:
                raise LeaseLimitExceeded(
                    f"type {type_id!r}: {n} instances exceed lease limit {limit}"
                )

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CloudConfig":
        problems = validate_config(doc)
        if problems:
            raise InvalidModel(problems)
        if "types" in doc:
            raw = list(doc["types"])
        else:
            raw = [dict(t, kind=t.get("kind", PUBLIC)) for t in doc["public_types"]]
            raw.append(dict(doc["private_type"], kind=doc["private_type"].get("kind", PRIVATE)))
        types = [
            ResourceType(
                type_id=str(t["type_id"]),
                kind=t["kind"],
                speed=t["speed"],
                cost_per_atu=t["cost_per_atu"],
                lease_limit=t["lease_limit"],
            )
            for t in raw
        ]
        return cls(
            public_types=tuple(t for t in types if t.kind == PUBLIC),
            private_type=next(t for t in types if t.kind == PRIVATE),
            atu_length=doc.get("atu_length", 1.0),
        )

    def to_dict(self) -> dict:
        return {"atu_length": self.atu_length, "types": [t.to_dict() for t in self.types]}


@dataclass(frozen=True)
class Operation:
    op_index: int
    base_time: float
    eligible_resources: frozenset

    def __post_init__(self):
        object.__setattr__(self, "eligible_resources", frozenset(self.eligible_resources))
        problems = []
        if not self.base_time > 0:
            problems.append(f"operation {self.op_index}: base_time must be > 0")
        if not self.eligible_resources:
            problems.append(f"operation {self.op_index}: eligible_resources must be non-empty")
        if problems:
            raise InvalidModel(problems)


@dataclass(frozen=True)
class Workload:
    workload_id: str
    exec_time: float
    delivery_date: float = 0.0
    required_amount: float = 0.0
    operations: tuple[Operation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        tag = f"workload {self.workload_id!r}: "
        problems = []
        if not self.exec_time > 0:
            problems.append(tag + "exec_time must be > 0")
        if not self.delivery_date >= 0:
            problems.append(tag + "delivery_date must be >= 0")
        if not self.required_amount >= 0:
            problems.append(tag + "required_amount must be >= 0")
        for pos, op in enumerate(self.operations):
            if op.op_index != pos:
                problems.append(tag + f"operation at position {pos} has op_index {op.op_index}")
        if self.operations:
            total = math.fsum(op.base_time for op in self.operations)
            if not math.isclose(total, self.exec_time, rel_tol=_REL_TOL):
                problems.append(
                    tag + f"operation base_times sum to {total!r}, not exec_time {self.exec_time!r}"
                )
        if problems:
            raise InvalidModel(problems)

    @property
    def total_processing_time(self) -> float:
        if self.operations:
            return math.fsum(op.base_time for op in self.operations)
        return self.exec_time

    @property
    def operation_count(self) -> int:
        return len(self.operations) or 1

    def job_operations(self, instance_ids: Iterable[str]) -> tuple[Operation, ...]:
        """Operation list in job-shop mode.

        A workload without operations acts as one operation of its whole
        exec_time, eligible on every instance.
        """
        if self.operations:
            return self.operations
        return (Operation(0, self.exec_time, frozenset(instance_ids)),)

    def bow_view(self) -> "Workload":
        """The same workload with its operation list dropped."""
        if not self.operations:
            return self
        return Workload(self.workload_id, self.exec_time, self.delivery_date, self.required_amount)


def check_distinct_ids(workloads: Iterable[Workload]) -> None:
    ids = Counter(w.workload_id for w in workloads)
    dupes = sorted(i for i, n in ids.items() if n > 1)
    if dupes:
        raise DuplicateWorkloadId(f"duplicate workload ids: {', '.join(map(str, dupes))}")


@dataclass(frozen=True)
class BagOfWorkloads:
    workloads: tuple[Workload, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "workloads", tuple(self.workloads))
        check_distinct_ids(self.workloads)

    def __len__(self) -> int:
        return len(self.workloads)

    def __iter__(self):
        return iter(self.workloads)

    def size_classes(self) -> tuple[tuple[float, ...], tuple[int, ...]]:
        return size_classes(self)


def size_classes(bow: BagOfWorkloads | Iterable[Workload]):
    """Group workloads by exec_time.

    Returns ``(sizes, counts)`` with sizes strictly increasing and counts the
    number of workloads of each size.
    """
    counts = Counter(w.exec_time for w in bow)
    if not counts:
        raise EmptyBag("size classes of an empty bag are undefined")
    sizes = tuple(sorted(counts))
    return sizes, tuple(counts[s] for s in sizes)


@dataclass(frozen=True)
class Assignment:
    """Total mapping workload_id -> instance_id over the given instances."""

    mapping: Mapping[str, str]
    instances: tuple[ResourceInstance, ...]

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))
        object.__setattr__(self, "instances", tuple(self.instances))
        known = {i.instance_id for i in self.instances}
        stray = sorted({i for i in self.mapping.values() if i not in known})
        if stray:
            raise InvalidModel(f"assignment references unknown instances: {', '.join(stray)}")

    def preimage(self) -> dict[str, list[str]]:
        """instance_id -> workload ids assigned to it (the set R_m), id-sorted."""
        out: dict[str, list[str]] = {}
        for wid, iid in sorted(self.mapping.items()):
            out.setdefault(iid, []).append(wid)
        return out


@dataclass(frozen=True)
class ScheduleEntry:
    workload_id: str
    op_index: int
    instance_id: str
    start: float
    end: float


@dataclass(frozen=True)
class Schedule:
    """Timed operation intervals in dispatch order.

    Only shape is enforced here; overlap, precedence and duration checks need
    the workloads and instances and live in :func:`bowsched.sim.validate_schedule`.
    """

    entries: tuple[ScheduleEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def makespan(self) -> float:
        return max((e.end for e in self.entries), default=0.0)

    def by_instance(self) -> dict[str, list[ScheduleEntry]]:
        out: dict[str, list[ScheduleEntry]] = {}
        for e in sorted(self.entries, key=lambda e: (e.instance_id, e.start, e.end)):
            out.setdefault(e.instance_id, []).append(e)
        return out

    def to_dicts(self) -> list[dict]:
        return [
            {
                "workload_id": e.workload_id,
                "op_index": e.op_index,
                "instance_id": e.instance_id,
                "start": e.start,
                "end": e.end,
            }
            for e in self.entries
        ]

    @classmethod
    def from_dicts(cls, rows: Iterable[Mapping]) -> "Schedule":
        return cls(
            tuple(
                ScheduleEntry(
                    str(r["workload_id"]),
                    int(r["op_index"]),
                    str(r["instance_id"]),
                    float(r["start"]),
                    float(r["end"]),
                )
                for r in rows
            )
        )


@dataclass(frozen=True)
class InstanceMetrics:
    busy_time: float
    atus_billed: float
    cost: float
    z_contribution: float


@dataclass(frozen=True)
class WorkloadStats:
    start: float
    completion: float
    flow_time: float
    lateness: float


@dataclass(frozen=True)
class MetricsReport:
    per_instance: Mapping[str, InstanceMetrics]
    makespan: float
    total_cost: float
    objective_z: float
    mean_exec_time: float
    cost_per_workload: float
    per_workload: Mapping[str, WorkloadStats] = field(default_factory=dict)

    def __post_init__(self):
        zs = [m.z_contribution for m in self.per_instance.values()]
        costs = [m.cost for m in self.per_instance.values()]
        if not math.isclose(self.objective_z, math.fsum(zs), rel_tol=_REL_TOL, abs_tol=1e-12):
            raise InvalidModel("objective_z must equal the sum of per-instance contributions")
        if not math.isclose(self.total_cost, math.fsum(costs), rel_tol=_REL_TOL, abs_tol=1e-12):
            raise InvalidModel("total_cost must equal the sum of per-instance costs")

    @property
    def late_workloads(self) -> int:
        return sum(1 for s in self.per_workload.values() if s.lateness > 0)
