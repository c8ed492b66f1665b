import random

import pytest
from hypothesis import HealthCheck, settings

from bowsched.core import (
    BagOfWorkloads,
    CloudConfig,
    Operation,
    ResourceInstance,
    ResourceType,
    Workload,
)

settings.register_profile(
    "repo", derandomize=True, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def public(type_id, speed, cost, lease):
    return ResourceType(type_id, "public", speed, cost, lease)


def private(type_id, speed, cost, lease):
    return ResourceType(type_id, "private", speed, cost, lease)


def bag(*exec_times, prefix="w"):
    return BagOfWorkloads(tuple(Workload(f"{prefix}{i}", float(e)) for i, e in enumerate(exec_times)))


@pytest.fixture
def equal_cfg():
    """Public P (speed 2, cost 2, two leases) plus private F (speed 1, cost 1)."""
    return CloudConfig((public("P", 2.0, 2.0, 2),), private("F", 1.0, 1.0, 1))


@pytest.fixture
def vary_cfg():
    return CloudConfig((public("P", 1.0, 2.0, 1),), private("F", 1.0, 1.0, 1))


def trace_scenario(w1="W1", w2="W2", dd1=0.0, dd2=1.0):
    """R1, R2 at speed 1; W1 = O11(2 on R1) -> O12(1 on R2); W2 = O21(3 on R2)."""
    cfg = CloudConfig((public("pub", 1.0, 1.0, 2),), private("priv", 1.0, 1.0, 0))
    instances = (ResourceInstance("R1", "pub"), ResourceInstance("R2", "pub"))
    wa = Workload(
        w1,
        3.0,
        delivery_date=dd1,
        operations=(Operation(0, 2.0, frozenset({"R1"})), Operation(1, 1.0, frozenset({"R2"}))),
    )
    wb = Workload(w2, 3.0, delivery_date=dd2, operations=(Operation(0, 3.0, frozenset({"R2"})),))
    return [wa, wb], instances, cfg


@pytest.fixture
def trace():
    return trace_scenario()


def random_small_instance(seed):
    """Oracle-sized problem; even seeds use power-of-two values to force ties."""
    rng = random.Random(seed)
    dyadic = seed % 2 == 0
    h = rng.randint(0, 2)
    leases = [0] * (h + 1)
    for _ in range(rng.randint(1, 6)):
        leases[rng.randrange(h + 1)] += 1

    def speed():
        return rng.choice([0.5, 1.0, 2.0, 4.0]) if dyadic else rng.uniform(0.5, 4.0)

    pubs = tuple(
        public(f"p{i}", speed(), rng.choice([1.0, 2.0, 3.0]) if dyadic else rng.uniform(0.0, 5.0), leases[i])
        for i in range(h)
    )
    priv = private("f", speed(), rng.choice([0.5, 1.0]) if dyadic else rng.uniform(0.0, 3.0), leases[h])
    cfg = CloudConfig(pubs, priv, atu_length=rng.choice([1.0, 0.5, 2.0]))
    if dyadic:
        sizes = [1.0, 2.0, 3.0, 0.5]
    else:
        sizes = [rng.uniform(0.5, 5.0) for _ in range(3)]
    d = rng.randint(0, 8)
    return BagOfWorkloads(tuple(Workload(f"w{i}", rng.choice(sizes)) for i in range(d))), cfg
