"""JSON-friendly scenario documents: cloud config, instances and workloads."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import BagOfWorkloads, CloudConfig, Operation, ResourceInstance, Workload
from .errors import InvalidModel


@dataclass(frozen=True)
class Scenario:
    bow: BagOfWorkloads
    config: CloudConfig
    instances: tuple[ResourceInstance, ...]

    def to_dict(self) -> dict:
        return {
            "cloud": self.config.to_dict(),
            "instances": [{"instance_id": i.instance_id, "type_id": i.type_id} for i in self.instances],
            "workloads": [workload_to_dict(w) for w in self.bow],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Scenario":
        try:
            config = CloudConfig.from_dict(doc["cloud"])
            if "instances" in doc:
                instances = tuple(
                    ResourceInstance(str(i["instance_id"]), str(i["type_id"])) for i in doc["instances"]
                )
            else:
                instances = config.instances()
            bow = BagOfWorkloads(tuple(workload_from_dict(w) for w in doc.get("workloads", ())))
        except (KeyError, TypeError) as exc:
            raise InvalidModel(f"malformed scenario document: {exc!r}") from None
        try:
            config.check_instances(instances)
        except KeyError as exc:
            raise InvalidModel(str(exc)) from None
        return cls(bow, config, instances)


def workload_to_dict(w: Workload) -> dict:
    out = {
        "workload_id": w.workload_id,
        "exec_time": w.exec_time,
        "delivery_date": w.delivery_date,
        "required_amount": w.required_amount,
    }
    if w.operations:
        out["operations"] = [
            {"base_time": op.base_time, "eligible_resources": sorted(op.eligible_resources)}
            for op in w.operations
        ]
    return out


def workload_from_dict(doc: Mapping) -> Workload:
    ops = tuple(
        Operation(k, float(op["base_time"]), frozenset(map(str, op["eligible_resources"])))
        for k, op in enumerate(doc.get("operations", ()))
    )
    return Workload(
        workload_id=str(doc["workload_id"]),
        exec_time=float(doc["exec_time"]),
        delivery_date=float(doc.get("delivery_date", 0.0)),
        required_amount=float(doc.get("required_amount", 0.0)),
        operations=ops,
    )
