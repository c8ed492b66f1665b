"""Seeded synthetic scenarios shaped like the evaluation setup.

All draws come from numpy's PCG64 bit generator (O'Neill's permuted
congruential generator, 128-bit LCG state, XSL-RR output), seeded with
``spec.seed``. Draw order is fixed and documented in :func:`generate`, so a
seed pins the scenario exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping

import numpy as np

from .core import BagOfWorkloads, CloudConfig, Operation, ResourceInstance, ResourceType, Workload
from .errors import InfeasibleSpec

SWEEP_WORKLOAD_COUNTS = (100, 200, 300)
SWEEP_INSTANCE_COUNTS = (50, 60, 70)
SWEEP_RUNS = 50


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    n_workloads: int = 300
    n_instances: int = 50
    n_public_types: int = 3
    exec_time_range: tuple[float, float] = (1.0, 10.0)
    delivery_window: float = 50.0
    # when set, delivery dates span rate * n_workloads instead of delivery_window
    delivery_rate: float | None = 1.0 / 6.0
    ops_per_workload_range: tuple[int, int] = (1, 4)
    speed_range: tuple[float, float] = (1.0, 4.0)
    cost_range: tuple[float, float] = (0.5, 5.0)
    eligibility_density: float = 0.5
    required_amount_range: tuple[int, int] = (1, 10)
    atu_length: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if f.name.endswith("_range"):
                object.__setattr__(self, f.name, tuple(getattr(self, f.name)))
        problems = []
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be an unsigned 64-bit integer")
        if self.n_workloads < 0 or self.n_instances < 0:
            problems.append("counts must be >= 0")
        if self.n_public_types < 0:
            problems.append("n_public_types must be >= 0")
        for name in ("exec_time_range", "ops_per_workload_range", "speed_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                problems.append(f"{name} needs 0 < lo <= hi")
        for name in ("cost_range", "required_amount_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                problems.append(f"{name} needs 0 <= lo <= hi")
        if not self.delivery_window >= 0:
            problems.append("delivery_window must be >= 0")
        if self.delivery_rate is not None and not self.delivery_rate > 0:
            problems.append("delivery_rate must be > 0 or null")
        if not 0 < self.eligibility_density <= 1:
            problems.append("eligibility_density must be in (0, 1]")
        if not self.atu_length > 0:
            problems.append("atu_length must be > 0")
        if problems:
            raise InfeasibleSpec("; ".join(problems))

    @property
    def delivery_horizon(self) -> float:
        """Delivery dates are drawn uniformly from ``[0, delivery_horizon)``.

        A fixed horizon packs more work into the same window as the bag
        grows, which lets ATU rounding amortize and drives cost per workload
        down. Scaling it with the bag size keeps the arrival density fixed.
        """
        if self.delivery_rate is None:
            return self.delivery_window
        return self.delivery_rate * self.n_workloads

    def to_dict(self) -> dict:
        out = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "GenSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise InfeasibleSpec(f"unknown GenSpec fields: {', '.join(unknown)}")
        return cls(**dict(doc))

    def replace(self, **changes) -> "GenSpec":
        return GenSpec(**{**asdict(self), **changes})


def generate(spec: GenSpec) -> tuple[BagOfWorkloads, CloudConfig, tuple[ResourceInstance, ...]]:
    """Build a scenario. Draw order:

    1. one speed and one cost per type (private first, then public types);
    2. per workload: exec_time, delivery_date, required_amount, op count;
    3. per operation, in workload order: a split weight in [0.5, 1.5);
    4. per operation: one uniform per instance for eligibility, then, only
       for operations left with no eligible instance, one forced instance.

    Instances ``r000, r001, ...`` are dealt round-robin over the types
    (private first). Each type's lease limit equals its instance count.
    """
    if spec.n_workloads > 0 and spec.n_instances == 0:
        raise InfeasibleSpec("workloads need at least one instance")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n_types = spec.n_public_types + 1

    speeds = rng.uniform(*spec.speed_range, size=n_types)
    costs = rng.uniform(*spec.cost_range, size=n_types)
    type_ids = ["priv"] + [f"pub{i}" for i in range(1, n_types)]
    width = len(str(max(spec.n_instances - 1, 0)))
    width = max(width, 3)
    instances = tuple(
        ResourceInstance(f"r{k:0{width}d}", type_ids[k % n_types]) for k in range(spec.n_instances)
    )
    lease = [sum(1 for i in instances if i.type_id == t) for t in type_ids]
    rtypes = [
        ResourceType(t, "private" if i == 0 else "public", float(speeds[i]), float(costs[i]), lease[i])
        for i, t in enumerate(type_ids)
    ]
    config = CloudConfig(tuple(rtypes[1:]), rtypes[0], atu_length=spec.atu_length)

    n = spec.n_workloads
    exec_times = rng.uniform(*spec.exec_time_range, size=n)
    due = rng.uniform(0.0, spec.delivery_horizon, size=n)
    amounts = rng.integers(spec.required_amount_range[0], spec.required_amount_range[1], size=n, endpoint=True)
    lo, hi = spec.ops_per_workload_range
    n_ops = rng.integers(int(lo), int(hi), size=n, endpoint=True)
    total_ops = int(n_ops.sum())
    weights = rng.uniform(0.5, 1.5, size=total_ops)
    elig = rng.random((total_ops, spec.n_instances)) < spec.eligibility_density
    empty = np.flatnonzero(~elig.any(axis=1)) if spec.n_instances else np.array([], dtype=int)
    forced = rng.integers(0, max(spec.n_instances, 1), size=len(empty))
    elig[empty, forced] = True

    ids = [i.instance_id for i in instances]
    wwidth = max(len(str(max(n - 1, 0))), 4)
    workloads = []
    pos = 0
    for r in range(n):
        k = int(n_ops[r])
        w = weights[pos : pos + k]
        bases = [float(x) for x in exec_times[r] * w / w.sum()]
        ops = tuple(
            Operation(i, bases[i], frozenset(ids[c] for c in np.flatnonzero(elig[pos + i])))
            for i in range(k)
        )
        pos += k
        workloads.append(
            Workload(
                workload_id=f"w{r:0{wwidth}d}",
                exec_time=math.fsum(bases),
                delivery_date=float(due[r]),
                required_amount=float(amounts[r]),
                operations=ops,
            )
        )
    return BagOfWorkloads(tuple(workloads)), config, instances
