"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SchedulingError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModel(SchedulingError, ValueError):
    """A domain object was built with values that break its invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class EmptyBag(SchedulingError):
    pass


class DuplicateWorkloadId(InvalidModel):
    pass


class LeaseLimitExceeded(SchedulingError):
    pass


class UnassignedWorkload(SchedulingError):
    pass


class PlanInfeasible(SchedulingError):
    pass


class Infeasible(SchedulingError):
    """No plan satisfies the lease limits (e.g. work but no leasable instance)."""


class SearchBudgetExceeded(SchedulingError):
    """The node limit was hit; ``result`` holds the incumbent."""

    def __init__(self, result, limit: int):
        self.result = result
        self.limit = limit
        super().__init__(
            f"search stopped after {limit} nodes; incumbent z={result.best_z:.6g}"
        )


class TooLargeForOracle(SchedulingError):
    pass


class NoEligibleResource(SchedulingError):
    pass


class InvalidSchedule(SchedulingError):
    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(v.description for v in self.violations[:3])
        more = len(self.violations) - 3
        if more > 0:
            head += f" (+{more} more)"
        super().__init__(head)


class InfeasibleSpec(SchedulingError, ValueError):
    pass
