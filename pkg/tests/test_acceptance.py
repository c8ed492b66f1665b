"""Acceptance criteria 1-8, one PASS/FAIL line each on the terminal."""

import functools
import math
import random
import time

import pytest

import laws
from bowsched import edbrs
from bowsched.baselines import fcfs_schedule, max_min_schedule, min_min_schedule
from bowsched.cli import main
from bowsched.core import BagOfWorkloads, CloudConfig, Workload
from bowsched.cost import (
    EqualLengthPlan,
    VaryingLengthPlan,
    equal_length_z,
    objective_z,
    varying_length_z,
)
from bowsched.gen import SWEEP_INSTANCE_COUNTS, SWEEP_RUNS, SWEEP_WORKLOAD_COUNTS, GenSpec, generate
from bowsched.optimal import brute_force_oracle, materialize, solve_equal_length, solve_general, solve_varying_length
from bowsched.sim import compute_metrics, validate_schedule

from conftest import bag, private, public, random_small_instance, trace_scenario


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_1_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    mismatches = []
    n = 0
    for seed in range(240):
        b, cfg = random_small_instance(seed)
        assert len(b) <= 8 and len(cfg.instances()) <= 6
        solved = solve_general(b, cfg).best_z
        exact = brute_force_oracle(b, cfg).best_z
        n += 1
        if solved != exact:
            mismatches.append((seed, solved, exact))
    took = time.perf_counter() - t0
    verdict(
        1,
        not mismatches and took < 30,
        f"{n} instances, {len(mismatches)} mismatches, {took:.1f}s (limit 30s)",
    )


def _random_types(rng):
    pubs = tuple(
        public(f"p{i}", rng.uniform(0.5, 4), rng.uniform(0, 5), rng.randint(1, 3)) for i in range(rng.randint(0, 2))
    )
    priv = private("f", rng.uniform(0.5, 4), rng.uniform(0, 3), rng.randint(1, 2))
    return CloudConfig(pubs, priv, atu_length=rng.choice([0.5, 1.0, 2.0]))


def _leased(rng, cfg):
    # at least one instance overall so the plan can hold work
    while True:
        n = {t.type_id: rng.randint(0, t.lease_limit) for t in cfg.types}
        if sum(n.values()):
            return n


def test_2_closed_forms_match_objective(verdict):
    rng = random.Random(2024)
    worst = 0.0
    checked = 0
    for _ in range(150):
        cfg = _random_types(rng)
        leased = _leased(rng, cfg)
        q = {t: rng.randint(0, 4) for t in leased}
        d = sum(q[t] * n for t, n in leased.items())
        e = rng.uniform(0.3, 6.0)
        plan = EqualLengthPlan.balanced(d, q, leased)
        b = BagOfWorkloads(tuple(Workload(f"w{i:02d}", e) for i in range(d)))
        asg = materialize(plan, b, cfg)
        closed, direct = equal_length_z(plan, e, cfg), objective_z(asg, b, cfg)
        worst = max(worst, abs(closed - direct) / max(abs(direct), 1e-300))
        checked += 1

        sizes = sorted({round(rng.uniform(0.3, 6.0), 6) for _ in range(rng.randint(1, 3))})
        cq = {(t, a): rng.randint(0, 3) for t in leased for a in range(len(sizes))}
        counts = [sum(cq[(t, a)] * n for t, n in leased.items()) for a in range(len(sizes))]
        vplan = VaryingLengthPlan.balanced(counts, cq, leased)
        ws, k = [], 0
        for a, c in enumerate(counts):
            for _ in range(c):
                ws.append(Workload(f"w{k:03d}", sizes[a]))
                k += 1
        vb = BagOfWorkloads(tuple(ws))
        if len(vb):
            present = [a for a, c in enumerate(counts) if c]
            # materialize works on the classes actually present in the bag
            vplan_present = VaryingLengthPlan(
                tuple(counts[a] for a in present),
                {t: tuple(tuple(v[a] for a in present) for v in rows) for t, rows in vplan.rows.items()},
            )
            vasg = materialize(vplan_present, vb, cfg)
            closed, direct = varying_length_z(vplan, sizes, cfg), objective_z(vasg, vb, cfg)
            if direct:
                worst = max(worst, abs(closed - direct) / abs(direct))
            else:
                worst = max(worst, abs(closed))
            checked += 1
    verdict(2, checked >= 200 and worst <= 1e-9, f"{checked} balanced plans, worst relative gap {worst:.2e} (limit 1e-9)")


def test_3_worked_instances(verdict):
    equal_cfg = CloudConfig((public("P", 2.0, 2.0, 2),), private("F", 1.0, 1.0, 1))
    vary_cfg = CloudConfig((public("P", 1.0, 2.0, 1),), private("F", 1.0, 1.0, 1))
    z_equal = solve_equal_length(3, 2.0, equal_cfg).best_z
    z_oracle_equal = brute_force_oracle(bag(2, 2, 2), equal_cfg).best_z
    z_vary = solve_varying_length((2, 1), (1.0, 3.0), vary_cfg).best_z
    z_oracle_vary = brute_force_oracle(bag(1, 1, 3), vary_cfg).best_z
    workloads, instances, cfg = trace_scenario()
    makespan = edbrs.schedule(workloads, instances, cfg)[0].makespan
    ok = z_equal == z_oracle_equal == 8 and z_vary == z_oracle_vary == 17 and makespan == 6
    verdict(3, ok, f"equal-length z={z_equal:g}, varying-length z={z_vary:g}, trace makespan={makespan:g}")


ALGOS = {
    "edbrs": lambda ws, inst, cfg: edbrs.dispatch(
        edbrs.partition_batches(edbrs.sort_workloads(ws), cfg.atu_length), inst, cfg
    ),
    "fcfs": fcfs_schedule,
    "minmin": min_min_schedule,
    "maxmin": max_min_schedule,
}


@functools.lru_cache(maxsize=1)
def suite():
    """Every (seed, scale, algorithm) cell: violation count, plus metrics for edbrs/fcfs."""
    violations = {}
    metrics = {}
    schedules = 0
    t0 = time.perf_counter()
    kept = []
    for seed in range(SWEEP_RUNS):
        for n in SWEEP_WORKLOAD_COUNTS:
            for m in SWEEP_INSTANCE_COUNTS:
                bow, cfg, inst = generate(GenSpec(seed=seed, n_workloads=n, n_instances=m))
                ws = list(bow)
                for name, algo in ALGOS.items():
                    sched = algo(ws, inst, cfg)
                    schedules += 1
                    violations[(name, seed, n, m)] = len(validate_schedule(sched, ws, inst, cfg))
                    if m == 50 and name in ("edbrs", "fcfs"):
                        kept.append(((name, seed, n), sched, ws, inst, cfg))
    took = time.perf_counter() - t0
    for key, sched, ws, inst, cfg in kept:
        metrics[key] = compute_metrics(sched, ws, inst, cfg, validate=False)
    return violations, metrics, schedules, took


def _mean(xs):
    xs = list(xs)
    return math.fsum(xs) / len(xs)


def test_4_all_schedules_valid(verdict):
    violations, _, schedules, took = suite()
    bad = {k: v for k, v in violations.items() if v}
    verdict(
        4,
        not bad and took < 60,
        f"{schedules} schedules, {len(bad)} with violations, {took:.1f}s (limit 60s)",
    )


def test_5_edbrs_beats_fcfs_on_average(verdict):
    _, metrics, _, _ = suite()

    def avg(algo, field):
        return _mean(getattr(metrics[(algo, s, 300)], field) for s in range(SWEEP_RUNS))

    ez, fz = avg("edbrs", "objective_z"), avg("fcfs", "objective_z")
    em, fm = avg("edbrs", "makespan"), avg("fcfs", "makespan")
    verdict(
        5,
        ez <= fz and em <= fm,
        f"300 workloads/50 instances: mean z {ez:.6g} vs {fz:.6g}, mean makespan {em:.6g} vs {fm:.6g}",
    )


def test_6_cost_per_workload_grows_with_bag_size(verdict):
    _, metrics, _, _ = suite()
    series = [
        _mean(metrics[("edbrs", s, n)].cost_per_workload for s in range(SWEEP_RUNS)) for n in SWEEP_WORKLOAD_COUNTS
    ]
    dips = [(b - a) / a for a, b in zip(series, series[1:])]
    ok = all(d >= -0.02 for d in dips)
    shown = ", ".join(f"{n}: {v:.4g}" for n, v in zip(SWEEP_WORKLOAD_COUNTS, series))
    verdict(6, ok, f"EDBRS cost per workload at 50 instances {shown} (adjacent dip limit 2%)")


def test_7_identical_config_identical_bytes(verdict, tmp_path):
    import json

    cfg = {
        "gen": {"n_workloads": 100, "n_instances": 50},
        "algorithms": ["edbrs", "fcfs", "minmin", "maxmin"],
        "seeds": [0, 1, 2],
        "workload_counts": [100, 200],
        "batch_window": 1.0,
    }
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main(["compare", "--config", str(path), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    small = tmp_path / "small.json"
    small.write_text(json.dumps({"gen": {"n_workloads": 6, "n_instances": 4}, "algorithms": ["optimal", "edbrs"], "seeds": [0, 1]}))
    for k in range(2):
        out = tmp_path / f"opt{k}.csv"
        assert main(["compare", "--config", str(small), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and outs[2] == outs[3] and len(outs[0]) > 0
    verdict(7, ok, f"repeat runs byte-identical ({len(outs[0])} and {len(outs[2])} bytes)")


LAWS = [
    laws.law_atu_monotone,
    laws.law_ceiling_steps,
    laws.law_ceiling_steps_at_exact_boundaries,
    laws.law_sort_key_is_a_strict_total_order,
    laws.law_sort_ignores_input_order,
    laws.law_metrics_ignore_entry_and_workload_order,
]


def test_8_property_suites(verdict):
    failed = []
    for law in LAWS:
        assert law.hypothesis.inner_test and law._hypothesis_internal_use_settings.max_examples >= 1000
        try:
            law()
        except Exception as exc:  # report every law, not just the first failure
            failed.append(f"{law.__name__}: {type(exc).__name__}")
    verdict(8, not failed, f"{len(LAWS)} laws x 1000 cases" + (f"; failed: {failed}" if failed else ", zero failures"))
