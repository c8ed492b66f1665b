"""Exact cost x time optimal assignment of a bag of workloads.

Workloads of equal size are interchangeable, so a solution is fully
described by how many workloads of each size class every leased instance
runs. The solvers search that space with branch and bound; the oracle
enumerates raw workload -> instance mappings and is the independent check.

Ties in z are broken by fewer leased instances, then by the lexicographically
smallest per-instance count vector (instances in slot order: types in config
order, instances of a type by id).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .core import (
    Assignment,
    BagOfWorkloads,
    CloudConfig,
    ResourceInstance,
    ResourceType,
    size_classes,
)
from .cost import (
    EqualLengthPlan,
    VaryingLengthPlan,
    objective_z,
    row_load,
    z_contribution,
)
from .errors import Infeasible, SearchBudgetExceeded, TooLargeForOracle

DEFAULT_NODE_LIMIT = 10**6
ORACLE_MAX_WORKLOADS = 8
ORACLE_MAX_INSTANCES = 6

# relative slack on pruning so float noise never discards a tied optimum
_PRUNE_SLACK = 1e-9


@dataclass(frozen=True)
class SolveResult:
    best: Any
    best_z: float
    nodes_explored: int
    proven_optimal: bool
    plan: Any = None


def _slots(config: CloudConfig, instances: Sequence[ResourceInstance] | None):
    """Leasable instances grouped by type, types in config order, ids sorted."""
    if instances is None:
        instances = config.instances()
    config.check_instances(instances)
    out = []
    for t in config.types:
        out.extend(sorted((i for i in instances if i.type_id == t.type_id), key=lambda i: i.instance_id))
    return out


class _Search:
    """Depth-first branch and bound over per-slot class-count vectors.

    Slots of one type are interchangeable, so vectors are forced to be
    lexicographically non-increasing within a type. The bound relaxes every
    remaining slot to its quadratic floor ``c * load**2`` with
    ``c = CO / (SP**2 * ATU)`` (ceilings only raise cost); splitting the
    remaining work W optimally over those gives ``W**2 / sum(1/c)``.
    """

    def __init__(self, sizes, counts, slot_types: Sequence[ResourceType], atu, node_limit):
        self.sizes = tuple(sizes)
        self.counts = tuple(counts)
        self.types = list(slot_types)
        self.atu = atu
        self.limit = node_limit
        self.k = len(self.sizes)
        n = len(self.types)
        self.n = n
        self.zero = (0,) * self.k

        self.next_type = [n] * n
        for j in range(n - 2, -1, -1):
            same = self.types[j + 1].type_id == self.types[j].type_id
            self.next_type[j] = self.next_type[j + 1] if same else j + 1

        self.inv_rate = [0.0] * (n + 1)
        for j in range(n - 1, -1, -1):
            t = self.types[j]
            if t.cost_per_atu == 0:
                self.inv_rate[j] = math.inf
            else:
                self.inv_rate[j] = self.inv_rate[j + 1] + (t.speed**2 * atu) / t.cost_per_atu

        self._memo: dict = {}
        self.nodes = 0
        self.best_key = None
        self.best_assign = None
        self.exhausted = False

    def contrib(self, j, vec) -> float:
        key = (self.types[j].type_id, vec)
        val = self._memo.get(key)
        if val is None:
            val = z_contribution(row_load(vec, self.sizes), self.types[j], self.atu)
            self._memo[key] = val
        return val

    def work(self, rem) -> float:
        return sum(q * e for q, e in zip(rem, self.sizes))

    def bound(self, rem, start) -> float:
        w = self.work(rem)
        if w == 0:
            return 0.0
        inv = self.inv_rate[start]
        if inv == math.inf:
            return 0.0
        return w * w / inv

    def key(self, assign):
        z = math.fsum(self.contrib(j, v) for j, v in enumerate(assign))
        return (z, sum(1 for v in assign if any(v)), tuple(assign))

    def offer(self, assign):
        key = self.key(assign)
        if self.best_key is None or key < self.best_key:
            self.best_key = key
            self.best_assign = list(assign)

    def greedy(self):
        """Largest-first, each workload to the slot with the smallest z increase."""
        if self.n == 0:
            return
        loads = [self.zero] * self.n
        order = sorted(range(self.k), key=lambda a: -self.sizes[a])
        for a in order:
            for _ in range(self.counts[a]):
                best_j, best_d = 0, math.inf
                for j in range(self.n):
                    cur = loads[j]
                    nxt = cur[:a] + (cur[a] + 1,) + cur[a + 1 :]
                    delta = self.contrib(j, nxt) - self.contrib(j, cur)
                    if delta < best_d:
                        best_j, best_d = j, delta
                cur = loads[best_j]
                loads[best_j] = cur[:a] + (cur[a] + 1,) + cur[a + 1 :]
        # canonical form: non-increasing within each type
        j = 0
        while j < self.n:
            end = self.next_type[j]
            loads[j:end] = sorted(loads[j:end], reverse=True)
            j = end
        self.offer(loads)

    def candidates(self, rem, cap):
        """Vectors v <= rem (componentwise) and v <=lex cap, in descending lex order."""
        k = self.k

        def rec(a, tight):
            hi = rem[a]
            if tight and cap[a] < hi:
                hi = cap[a]
            for x in range(hi, -1, -1):
                t2 = tight and x == cap[a]
                if a == k - 1:
                    yield (x,)
                else:
                    for rest in rec(a + 1, t2):
                        yield (x,) + rest

        return rec(0, cap is not None)

    def run(self):
        total = tuple(self.counts)
        if not any(total):
            self.best_key = (0.0, 0, (self.zero,) * self.n)
            self.best_assign = [self.zero] * self.n
            self.exhausted = True
            return
        if self.n == 0:
            raise Infeasible("work to place but no leasable instance")
        self.greedy()
        assign = [self.zero] * self.n
        try:
            self._dfs(0, total, None, 0.0, assign)
            self.exhausted = True
        except _BudgetHit:
            self.exhausted = False

    def _dfs(self, j, rem, cap, partial, assign):
        last = j == self.n - 1
        options = ([rem] if cap is None or rem <= cap else []) if last else self.candidates(rem, cap)
        nxt_type = self.next_type[j]
        for vec in options:
            self.nodes += 1
            if self.nodes > self.limit:
                raise _BudgetHit
            p2 = partial + self.contrib(j, vec)
            limit = self.best_key[0] * (1 + _PRUNE_SLACK) + 1e-12
            if p2 > limit:
                continue
            rem2 = tuple(r - v for r, v in zip(rem, vec))
            assign[j] = vec
            if not any(rem2):
                self.offer(assign)
            else:
                nxt = j + 1 if any(vec) else nxt_type
                if nxt < self.n and p2 + self.bound(rem2, nxt) <= limit:
                    cap2 = vec if nxt < nxt_type else None
                    self._dfs(nxt, rem2, cap2, p2, assign)
            assign[j] = self.zero


class _BudgetHit(Exception):
    pass


def _run_search(sizes, counts, slots, config, node_limit):
    search = _Search(sizes, counts, [config.type_of(s.type_id) for s in slots], config.atu_length, node_limit)
    search.run()
    return search


def _rows_by_type(slots, assign):
    rows: dict[str, list] = {}
    for slot, vec in zip(slots, assign):
        if any(vec):
            rows.setdefault(slot.type_id, []).append(vec)
    return {t: tuple(v) for t, v in rows.items()}


def _finish(plan, z, nodes, exhausted, limit):
    result = SolveResult(plan, z, nodes, exhausted, plan=plan)
    if not exhausted:
        raise SearchBudgetExceeded(result, limit)
    return result


def solve_varying_length(
    class_counts: Sequence[int],
    sizes: Sequence[float],
    config: CloudConfig,
    *,
    instances: Sequence[ResourceInstance] | None = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> SolveResult:
    """Minimum-z plan for ``class_counts[a]`` workloads of size ``sizes[a]``.

    Raises SearchBudgetExceeded (carrying the incumbent) if ``node_limit``
    nodes are expanded before the search is exhausted.
    """
    if len(class_counts) != len(sizes):
        raise ValueError("class_counts and sizes differ in length")
    if any(c < 0 for c in class_counts):
        raise ValueError("class counts must be non-negative")
    slots = _slots(config, instances)
    search = _run_search(sizes, class_counts, slots, config, node_limit)
    plan = VaryingLengthPlan(tuple(class_counts), _rows_by_type(slots, search.best_assign))
    return _finish(plan, search.best_key[0], search.nodes, search.exhausted, node_limit)


def solve_equal_length(
    d: int,
    exec_time: float,
    config: CloudConfig,
    *,
    instances: Sequence[ResourceInstance] | None = None,
    balanced: bool = False,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> SolveResult:
    """Minimum-z plan for ``d`` workloads of size ``exec_time``.

    With ``balanced=True`` the search is restricted to plans where every
    leased instance of a type runs the same number of workloads.
    """
    if d < 0:
        raise ValueError("d must be >= 0")
    if not exec_time > 0:
        raise ValueError("exec_time must be > 0")
    slots = _slots(config, instances)
    if balanced:
        return _solve_balanced(d, exec_time, config, slots)
    search = _run_search((exec_time,), (d,), slots, config, node_limit)
    counts = {t: tuple(v[0] for v in vecs) for t, vecs in _rows_by_type(slots, search.best_assign).items()}
    plan = EqualLengthPlan(d, counts)
    return _finish(plan, search.best_key[0], search.nodes, search.exhausted, node_limit)


def _solve_balanced(d, exec_time, config, slots):
    groups: list[tuple[ResourceType, int]] = []
    for s in slots:
        if groups and groups[-1][0].type_id == s.type_id:
            groups[-1] = (groups[-1][0], groups[-1][1] + 1)
        else:
            groups.append((config.type_of(s.type_id), 1))
    if d == 0:
        return SolveResult(EqualLengthPlan(0), 0.0, 1, True, plan=EqualLengthPlan(0))
    if not groups:
        raise Infeasible("work to place but no leasable instance")

    best = None
    nodes = 0

    def rec(g, remaining, chosen):
        nonlocal best, nodes
        nodes += 1
        if g == len(groups):
            if remaining:
                return
            contribs = [
                z_contribution(row_load((q,), (exec_time,)), rtype, config.atu_length)
                for (rtype, _), (n, q) in zip(groups, chosen)
                for _ in range(n)
            ]
            qvec = tuple(x for (_, size), (n, q) in zip(groups, chosen) for x in (q,) * n + (0,) * (size - n))
            key = (math.fsum(contribs), sum(n for n, q in chosen if q), qvec)
            if best is None or key < best[0]:
                best = (key, list(chosen))
            return
        _, size = groups[g]
        rec(g + 1, remaining, chosen + [(0, 0)])
        for n in range(1, size + 1):
            for q in range(1, remaining // n + 1):
                rec(g + 1, remaining - n * q, chosen + [(n, q)])

    rec(0, d, [])
    if best is None:
        raise Infeasible("no balanced plan places every workload")
    plan = EqualLengthPlan.balanced(
        d,
        {rtype.type_id: q for (rtype, _), (n, q) in zip(groups, best[1]) if n},
        {rtype.type_id: n for (rtype, _), (n, q) in zip(groups, best[1]) if n},
    )
    return SolveResult(plan, best[0][0], nodes, True, plan=plan)


def materialize(plan, bow: BagOfWorkloads, config: CloudConfig, instances=None) -> Assignment:
    """Deal concrete workloads onto instances according to a plan.

    Workloads of each class are taken in id order; the k-th row of a type
    goes to the k-th instance of that type (id order).
    """
    slots = _slots(config, instances)
    if isinstance(plan, EqualLengthPlan):
        sizes = tuple(sorted({w.exec_time for w in bow}))
        if len(sizes) > 1:
            raise ValueError("equal-length plan given for a bag with several sizes")
        rows = {t: tuple((q,) for q in qs) for t, qs in plan.counts.items()}
    else:
        sizes, _ = size_classes(bow) if len(bow) else ((), ())
        rows = plan.rows
    pools = {e: sorted(w.workload_id for w in bow if w.exec_time == e) for e in sizes}
    cursor = {e: 0 for e in sizes}
    by_type: dict[str, list[ResourceInstance]] = {}
    for s in slots:
        by_type.setdefault(s.type_id, []).append(s)
    mapping = {}
    for type_id, vecs in rows.items():
        for inst, vec in zip(by_type.get(type_id, []), vecs):
            for a, q in enumerate(vec):
                if not q:
                    continue
                e = sizes[a]
                for wid in pools[e][cursor[e] : cursor[e] + q]:
                    mapping[wid] = inst.instance_id
                cursor[e] += q
    return Assignment(mapping, tuple(slots))


def solve_general(
    bow: BagOfWorkloads,
    config: CloudConfig,
    *,
    instances: Sequence[ResourceInstance] | None = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> SolveResult:
    """Optimal assignment for an arbitrary bag via its size classes."""
    slots = _slots(config, instances)
    if len(bow) == 0:
        return SolveResult(Assignment({}, tuple(slots)), 0.0, 0, True)
    sizes, counts = size_classes(bow)
    try:
        res = solve_varying_length(counts, sizes, config, instances=slots, node_limit=node_limit)
    except SearchBudgetExceeded as exc:
        partial = exc.result
        assignment = materialize(partial.plan, bow, config, slots)
        result = SolveResult(
            assignment, objective_z(assignment, bow, config), partial.nodes_explored, False, partial.plan
        )
        raise SearchBudgetExceeded(result, node_limit) from None
    assignment = materialize(res.plan, bow, config, slots)
    return SolveResult(assignment, objective_z(assignment, bow, config), res.nodes_explored, True, res.plan)


def _oracle_z_batch(choice, exec_times, speeds, costs, public, atu):
    n_rows = choice.shape[0]
    loads = np.zeros((n_rows, len(speeds)))
    rows = np.arange(n_rows)
    for r, e in enumerate(exec_times):
        loads[rows, choice[:, r]] += e
    times = loads / speeds
    billed = np.where(public, costs * np.ceil(times / atu), costs * times / atu)
    return (billed * times).sum(axis=1), loads


def brute_force_oracle(
    bow: BagOfWorkloads,
    config: CloudConfig,
    *,
    instances: Sequence[ResourceInstance] | None = None,
    max_workloads: int = ORACLE_MAX_WORKLOADS,
    max_instances: int = ORACLE_MAX_INSTANCES,
    chunk: int = 1 << 17,
) -> SolveResult:
    """Exact minimum by scoring every workload -> instance mapping.

    Mappings are screened in vectorized chunks; every mapping within float
    noise of the screened minimum is rescored with :func:`objective_z` and the
    smallest exact value wins.
    """
    slots = _slots(config, instances)
    d, m = len(bow), len(slots)
    if d > max_workloads or m > max_instances:
        raise TooLargeForOracle(
            f"{d} workloads on {m} instances exceeds oracle caps "
            f"({max_workloads} workloads, {max_instances} instances)"
        )
    workloads = sorted(bow, key=lambda w: w.workload_id)
    if d == 0:
        return SolveResult(Assignment({}, tuple(slots)), 0.0, 1, True)
    if m == 0:
        raise Infeasible("work to place but no leasable instance")

    rtypes = [config.type_of(s.type_id) for s in slots]
    speeds = np.array([t.speed for t in rtypes], dtype=float)
    costs = np.array([t.cost_per_atu for t in rtypes], dtype=float)
    public = np.array([t.is_public for t in rtypes])
    exec_times = [w.exec_time for w in workloads]
    powers = m ** np.arange(d, dtype=np.int64)
    total = m**d

    near: list[np.ndarray] = []
    best_screen = math.inf
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        choice = (idx[:, None] // powers[None, :]) % m
        z, _ = _oracle_z_batch(choice, exec_times, speeds, costs, public, config.atu_length)
        best_screen = min(best_screen, float(z.min()))
        near.append(choice[z <= best_screen * (1 + _PRUNE_SLACK) + 1e-12])
    cut = best_screen * (1 + _PRUNE_SLACK) + 1e-12
    cand = np.concatenate(near)
    z_cand, loads = _oracle_z_batch(cand, exec_times, speeds, costs, public, config.atu_length)
    keep = z_cand <= cut
    cand, loads = cand[keep], loads[keep]
    # mappings with identical per-slot loads score identically; rescore one of each
    _, first = np.unique(loads, axis=0, return_index=True)

    bag = BagOfWorkloads(tuple(workloads))
    best_key, best_assignment = None, None
    for row in sorted(first):
        choice = cand[row]
        mapping = {w.workload_id: slots[int(c)].instance_id for w, c in zip(workloads, choice)}
        assignment = Assignment(mapping, tuple(slots))
        z = objective_z(assignment, bag, config)
        key = (z, len(set(int(c) for c in choice)), tuple(int(c) for c in choice))
        if best_key is None or key < best_key:
            best_key, best_assignment = key, assignment
    return SolveResult(best_assignment, best_key[0], total, True)
