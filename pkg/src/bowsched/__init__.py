"""Cost-aware scheduling of bags of workloads over hybrid public/private clouds."""

from .core import (
    Assignment,
    BagOfWorkloads,
    CloudConfig,
    MetricsReport,
    Operation,
    ResourceInstance,
    ResourceType,
    Schedule,
    ScheduleEntry,
    Workload,
    validate_config,
)
from .cost import EqualLengthPlan, VaryingLengthPlan, equal_length_z, objective_z, resource_cost, varying_length_z
from .edbrs import schedule as edbrs_schedule
from .gen import GenSpec, generate
from .optimal import SolveResult, brute_force_oracle, solve_equal_length, solve_general, solve_varying_length
from .sim import compute_metrics, validate_schedule

__all__ = [
    "Assignment",
    "BagOfWorkloads",
    "CloudConfig",
    "EqualLengthPlan",
    "GenSpec",
    "MetricsReport",
    "Operation",
    "ResourceInstance",
    "ResourceType",
    "Schedule",
    "ScheduleEntry",
    "SolveResult",
    "VaryingLengthPlan",
    "Workload",
    "brute_force_oracle",
    "compute_metrics",
    "edbrs_schedule",
    "equal_length_z",
    "generate",
    "objective_z",
    "resource_cost",
    "solve_equal_length",
    "solve_general",
    "solve_varying_length",
    "validate_config",
    "validate_schedule",
    "varying_length_z",
]
