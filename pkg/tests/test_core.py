import itertools

import pytest

from bowsched.core import (
    Assignment,
    BagOfWorkloads,
    CloudConfig,
    MetricsReport,
    InstanceMetrics,
    Operation,
    ResourceInstance,
    ResourceType,
    Workload,
    size_classes,
    validate_config,
)
from bowsched.errors import DuplicateWorkloadId, EmptyBag, InvalidModel, LeaseLimitExceeded

from conftest import bag, private, public


def raw_type(type_id, kind="public", speed=1.0, cost=1.0, lease=1):
    return {"type_id": type_id, "kind": kind, "speed": speed, "cost_per_atu": cost, "lease_limit": lease}


def test_zero_speed_is_reported():
    doc = {"types": [raw_type("a", speed=0), raw_type("f", kind="private")]}
    problems = validate_config(doc)
    assert any("speed must be > 0" in p for p in problems)


def test_two_private_types_are_reported():
    doc = {"types": [raw_type("f1", kind="private"), raw_type("f2", kind="private")]}
    assert any("exactly one private type" in p for p in validate_config(doc))


def test_well_formed_config_has_no_violations():
    cfg = CloudConfig((public("a", 1, 1, 2), public("b", 2, 3, 1)), private("f", 1, 1, 1))
    assert validate_config(cfg) == []
    assert validate_config(cfg.to_dict()) == []


def test_split_public_private_form_is_accepted():
    doc = {"public_types": [raw_type("a")], "private_type": raw_type("f", kind="private")}
    assert validate_config(doc) == []


def test_every_violation_is_listed():
    doc = {"atu_length": 0, "types": [raw_type("a", speed=-1, cost=-1, lease=-1), raw_type("a")]}
    problems = validate_config(doc)
    assert len(problems) == 6  # speed, cost, lease, duplicate id, no private type, atu


def test_config_construction_rejects_invalid_types():
    with pytest.raises(InvalidModel):
        ResourceType("a", "public", 0.0, 1.0, 1)
    with pytest.raises(InvalidModel):
        ResourceType("a", "hybrid", 1.0, 1.0, 1)
    with pytest.raises(InvalidModel):
        CloudConfig((public("a", 1, 1, 1),), public("b", 1, 1, 1))
    with pytest.raises(InvalidModel):
        CloudConfig((public("a", 1, 1, 1),), private("a", 1, 1, 1))
    with pytest.raises(InvalidModel):
        CloudConfig((), private("f", 1, 1, 1), atu_length=0)


def test_config_round_trips_through_dict():
    cfg = CloudConfig((public("a", 1.5, 2, 2),), private("f", 1, 0.5, 1), atu_length=2.0)
    assert CloudConfig.from_dict(cfg.to_dict()) == cfg
    assert [i.instance_id for i in cfg.instances()] == ["a-0", "a-1", "f-0"]


def test_lease_limit_is_enforced_for_instances():
    cfg = CloudConfig((public("a", 1, 1, 1),), private("f", 1, 1, 1))
    cfg.check_instances([ResourceInstance("x", "a"), ResourceInstance("y", "f")])
    with pytest.raises(LeaseLimitExceeded):
        cfg.check_instances([ResourceInstance("x", "a"), ResourceInstance("y", "a")])
    with pytest.raises(InvalidModel):
        cfg.check_instances([ResourceInstance("x", "a"), ResourceInstance("x", "f")])


@pytest.mark.parametrize(
    "times, sizes, counts",
    [([2, 2, 5], (2.0, 5.0), (2, 1)), ([3], (3.0,), (1,)), ([1, 1, 1, 1], (1.0,), (4,))],
)
def test_size_classes(times, sizes, counts):
    assert size_classes(bag(*times)) == (sizes, counts)


def test_size_classes_of_empty_bag():
    with pytest.raises(EmptyBag):
        size_classes(BagOfWorkloads())


def test_size_classes_ignore_order():
    times = [4, 1, 4, 2, 1, 1]
    want = size_classes(bag(*times))
    for perm in itertools.islice(itertools.permutations(times), 50):
        assert size_classes(bag(*perm)) == want


def test_workload_invariants():
    with pytest.raises(InvalidModel):
        Workload("w", 0.0)
    with pytest.raises(InvalidModel):
        Workload("w", 1.0, delivery_date=-1)
    with pytest.raises(InvalidModel):
        Workload("w", 3.0, operations=(Operation(0, 1.0, frozenset({"r"})),))
    with pytest.raises(InvalidModel):
        Operation(0, 0.0, frozenset({"r"}))
    with pytest.raises(InvalidModel):
        Operation(0, 1.0, frozenset())
    w = Workload("w", 3.0, operations=(Operation(0, 1.0, frozenset({"r"})), Operation(1, 2.0, frozenset({"r"}))))
    assert w.total_processing_time == 3.0
    assert w.operation_count == 2
    assert w.bow_view().operations == ()


def test_workload_without_operations_runs_as_one():
    w = Workload("w", 2.5)
    (op,) = w.job_operations(["a", "b"])
    assert op.base_time == 2.5 and op.eligible_resources == {"a", "b"}


def test_bag_rejects_duplicate_ids():
    with pytest.raises(DuplicateWorkloadId):
        BagOfWorkloads((Workload("w", 1.0), Workload("w", 2.0)))


def test_assignment_preimage_and_unknown_instances():
    inst = (ResourceInstance("a", "t"), ResourceInstance("b", "t"))
    asg = Assignment({"w2": "a", "w1": "a", "w3": "b"}, inst)
    assert asg.preimage() == {"a": ["w1", "w2"], "b": ["w3"]}
    with pytest.raises(InvalidModel):
        Assignment({"w1": "zz"}, inst)


def test_metrics_report_sums_are_checked():
    per = {"a": InstanceMetrics(1.0, 1, 2.0, 2.0)}
    MetricsReport(per, 1.0, 2.0, 2.0, 1.0, 2.0)
    with pytest.raises(InvalidModel):
        MetricsReport(per, 1.0, 2.0, 3.0, 1.0, 2.0)
    with pytest.raises(InvalidModel):
        MetricsReport(per, 1.0, 5.0, 2.0, 1.0, 2.0)
