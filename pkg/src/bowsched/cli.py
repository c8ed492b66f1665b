"""Command-line front end and the experiment runner behind ``bowsched compare``.

Exit codes: 0 success, 2 config error, 3 schedule validation failure,
4 solver infeasible (or search budget exhausted).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

from . import baselines, edbrs
from .core import BagOfWorkloads, CloudConfig, Workload
from .errors import (
    Infeasible,
    InfeasibleSpec,
    InvalidModel,
    NoEligibleResource,
    SearchBudgetExceeded,
    TooLargeForOracle,
)
from .gen import GenSpec, generate
from .optimal import (
    ORACLE_MAX_INSTANCES,
    ORACLE_MAX_WORKLOADS,
    brute_force_oracle,
    solve_equal_length,
    solve_general,
    solve_varying_length,
)
from .scenario import Scenario
from .sim import bow_schedule, compute_metrics, validate_schedule

log = logging.getLogger("bowsched")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVALID = 3
EXIT_INFEASIBLE = 4

ALGORITHMS = ("edbrs", "fcfs", "minmin", "maxmin", "optimal")
CSV_COLUMNS = (
    "algo",
    "seed",
    "n_workloads",
    "n_instances",
    "makespan",
    "mean_exec_time",
    "total_cost",
    "cost_per_workload",
    "objective_z",
    "valid",
)
DETAIL_COLUMNS = (
    "algo",
    "seed",
    "n_workloads",
    "n_instances",
    "workload_id",
    "start",
    "completion",
    "flow_time",
    "lateness",
)
METRIC_COLUMNS = CSV_COLUMNS[4:9]


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6g}"
    return str(x)


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenSpec | str = field(default_factory=GenSpec)  # a spec, or a scenario file path
    algorithms: tuple[str, ...] = ("edbrs", "fcfs", "minmin", "maxmin")
    seeds: tuple[int, ...] = (0,)
    batch_window: float | None = None  # None: one ATU
    output: str | None = None  # None: stdout
    format: str = "csv"
    workload_counts: tuple[int, ...] | None = None  # None: gen.n_workloads only
    instance_counts: tuple[int, ...] | None = None
    detail: str | None = None  # per-workload CSV, written only when set

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for name in ("workload_counts", "instance_counts"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(int(x) for x in v))
        problems = []
        if not self.algorithms:
            problems.append("at least one algorithm is required")
        unknown = sorted(set(self.algorithms) - set(ALGORITHMS))
        if unknown:
            problems.append(f"unknown algorithms: {', '.join(unknown)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            problems.append("algorithms listed more than once")
        if not self.seeds and isinstance(self.gen, GenSpec):
            problems.append("at least one seed is required")
        if self.format not in ("csv", "json"):
            problems.append(f"format must be csv or json, not {self.format!r}")
        if self.batch_window is not None and not self.batch_window > 0:
            problems.append("batch_window must be > 0")
        if "optimal" in self.algorithms and isinstance(self.gen, GenSpec):
            too_big = [
                (n, m)
                for n, m in self.scales()
                if n > ORACLE_MAX_WORKLOADS or m > ORACLE_MAX_INSTANCES
            ]
            if too_big:
                problems.append(
                    f"optimal needs <= {ORACLE_MAX_WORKLOADS} workloads and <= "
                    f"{ORACLE_MAX_INSTANCES} instances; got scales {too_big}"
                )
        if problems:
            raise ConfigError("; ".join(problems))

    def scales(self) -> list[tuple[int, int]]:
        if not isinstance(self.gen, GenSpec):
            return []
        ns = self.workload_counts or (self.gen.n_workloads,)
        ms = self.instance_counts or (self.gen.n_instances,)
        return [(n, m) for n in ns for m in ms]

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperimentConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("experiment config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        kw = dict(doc)
        gen = kw.get("gen")
        if isinstance(gen, Mapping):
            try:
                kw["gen"] = GenSpec.from_dict(gen)
            except (InfeasibleSpec, TypeError) as exc:
                raise ConfigError(f"gen: {exc}") from None
        elif gen is not None and not isinstance(gen, str):
            raise ConfigError("gen must be a GenSpec mapping or a scenario file path")
        out = kw.get("output")
        if isinstance(out, Mapping):
            # {"path": ..., "format": ...} form
            kw["output"] = out.get("path")
            if "format" in out:
                kw["format"] = out["format"]
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "gen": self.gen.to_dict() if isinstance(self.gen, GenSpec) else self.gen,
            "algorithms": list(self.algorithms),
            "seeds": list(self.seeds),
            "batch_window": self.batch_window,
            "output": self.output,
            "format": self.format,
            "workload_counts": None if self.workload_counts is None else list(self.workload_counts),
            "instance_counts": None if self.instance_counts is None else list(self.instance_counts),
            "detail": self.detail,
        }


def load_document(path: str | Path):
    """Parse a JSON or YAML file (YAML for ``.yaml``/``.yml``)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        if path.suffix in (".yaml", ".yml"):
            import yaml

            return yaml.safe_load(text)
        return json.loads(text)
    except Exception as exc:  # parser errors differ between json and yaml
        raise ConfigError(f"cannot parse {path}: {exc}") from None


# ---------------------------------------------------------------- running


@dataclass
class Cell:
    algo: str
    seed: int | str
    n_workloads: int
    n_instances: int
    metrics: dict
    valid: bool
    detail: list = field(default_factory=list)
    problems: list = field(default_factory=list)
    schedule: object = None

    def row(self) -> dict:
        out = {
            "algo": self.algo,
            "seed": self.seed,
            "n_workloads": self.n_workloads,
            "n_instances": self.n_instances,
        }
        out.update({k: self.metrics.get(k, math.nan) for k in METRIC_COLUMNS})
        out["valid"] = self.valid
        return out


def run_algorithm(algo: str, scenario: Scenario, batch_window: float | None = None):
    """Schedule a scenario; returns ``(schedule, workloads it must cover)``."""
    workloads = list(scenario.bow)
    inst, cfg = scenario.instances, scenario.config
    if algo == "edbrs":
        window = cfg.atu_length if batch_window is None else batch_window
        batches = edbrs.partition_batches(edbrs.sort_workloads(workloads), window)
        return edbrs.dispatch(batches, inst, cfg), workloads
    if algo == "fcfs":
        return baselines.fcfs_schedule(workloads, inst, cfg), workloads
    if algo == "minmin":
        return baselines.min_min_schedule(workloads, inst, cfg), workloads
    if algo == "maxmin":
        return baselines.max_min_schedule(workloads, inst, cfg), workloads
    if algo == "optimal":
        # the cost model sees whole workloads; operation chains are dropped
        bow = BagOfWorkloads(tuple(w.bow_view() for w in workloads))
        res = solve_general(bow, cfg, instances=inst)
        return bow_schedule(res.best, bow, cfg), list(bow)
    raise ConfigError(f"unknown algorithm {algo!r}")


def run_cell(algo, scenario: Scenario, seed, batch_window=None) -> Cell:
    sched, workloads = run_algorithm(algo, scenario, batch_window)
    n, m = len(scenario.bow), len(scenario.instances)
    problems = validate_schedule(sched, workloads, scenario.instances, scenario.config)
    if problems:
        for p in problems:
            log.error("%s seed %s: %s: %s", algo, seed, p.kind, p.description)
        return Cell(algo, seed, n, m, {}, False, problems=problems, schedule=sched)
    rep = compute_metrics(sched, workloads, scenario.instances, scenario.config, validate=False)
    metrics = {k: getattr(rep, k) for k in METRIC_COLUMNS}
    detail = [
        (wid, s.start, s.completion, s.flow_time, s.lateness) for wid, s in rep.per_workload.items()
    ]
    return Cell(algo, seed, n, m, metrics, True, detail, schedule=sched)


@dataclass
class Report:
    cells: list[Cell]
    rows: list[dict]
    exit_code: int


def _aggregate(cells: Sequence[Cell]) -> list[dict]:
    groups: dict[tuple, list[Cell]] = {}
    for c in cells:
        groups.setdefault((c.algo, c.n_workloads, c.n_instances), []).append(c)
    out = []
    for (algo, n, m), group in groups.items():
        ok = [c for c in group if c.valid]
        row = {"algo": algo, "seed": "mean", "n_workloads": n, "n_instances": m}
        for k in METRIC_COLUMNS:
            row[k] = math.fsum(c.metrics[k] for c in ok) / len(ok) if ok else math.nan
        row["valid"] = len(ok) == len(group)
        out.append(row)
    return out


def _row_order(row: dict):
    seed = row["seed"]
    # per-seed rows first (numeric order), the mean row closes each group
    tail = (1, 0, "") if seed == "mean" else (0, seed, "") if isinstance(seed, int) else (0, -1, str(seed))
    return (row["n_workloads"], row["n_instances"], ALGORITHMS.index(row["algo"])) + tail


def run(config: ExperimentConfig) -> Report:
    """Every (scale, seed, algorithm) cell: generate, schedule, validate, measure.

    Raises Infeasible / SearchBudgetExceeded from the optimal solver and
    InvalidModel / InfeasibleSpec for unusable scenarios; validation failures
    become ``valid=false`` rows and exit code 3.
    """
    cells: list[Cell] = []
    if isinstance(config.gen, GenSpec):
        for n, m in config.scales():
            for seed in config.seeds:
                spec = config.gen.replace(seed=seed, n_workloads=n, n_instances=m)
                scenario = Scenario(*generate(spec))
                for algo in config.algorithms:
                    cells.append(run_cell(algo, scenario, seed, config.batch_window))
    else:
        scenario = Scenario.from_dict(load_document(config.gen))
        if "optimal" in config.algorithms and (
            len(scenario.bow) > ORACLE_MAX_WORKLOADS or len(scenario.instances) > ORACLE_MAX_INSTANCES
        ):
            raise ConfigError("optimal is limited to the oracle caps")
        for algo in config.algorithms:
            cells.append(run_cell(algo, scenario, "input", config.batch_window))
    rows = sorted([c.row() for c in cells] + _aggregate(cells), key=_row_order)
    code = EXIT_OK if all(c.valid for c in cells) else EXIT_INVALID
    return Report(cells, rows, code)


def render_csv(rows: Sequence[Mapping], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r[c]) for c in columns) + "\n")
    return buf.getvalue()


def render_json(rows: Sequence[Mapping]) -> str:
    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v

    doc = {"columns": list(CSV_COLUMNS), "rows": [{c: clean(r[c]) for c in CSV_COLUMNS} for r in rows]}
    return json.dumps(doc, indent=2) + "\n"


def render_detail(cells: Sequence[Cell]) -> str:
    rows = []
    for c in sorted(cells, key=lambda c: _row_order(c.row())):
        for wid, start, done, flow, late in c.detail:
            rows.append(dict(zip(DETAIL_COLUMNS, (c.algo, c.seed, c.n_workloads, c.n_instances, wid, start, done, flow, late))))
    return render_csv(rows, DETAIL_COLUMNS)


def write_report(report: Report, config: ExperimentConfig) -> None:
    text = render_csv(report.rows) if config.format == "csv" else render_json(report.rows)
    _emit(text, config.output)
    if config.detail:
        _emit(render_detail(report.cells), config.detail)


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        # newline="" keeps "\n" line ends on every platform, so bytes match
        with open(path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- subcommands


def _gen_spec(args) -> GenSpec:
    spec = GenSpec()
    if args.config:
        doc = load_document(args.config)
        if isinstance(doc, Mapping) and isinstance(doc.get("gen"), Mapping):
            doc = doc["gen"]
        spec = GenSpec.from_dict(doc)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workloads is not None:
        changes["n_workloads"] = args.workloads
    if args.instances is not None:
        changes["n_instances"] = args.instances
    return spec.replace(**changes) if changes else spec


def _scenario(args) -> Scenario:
    if getattr(args, "input", None):
        return Scenario.from_dict(load_document(args.input))
    return Scenario(*generate(_gen_spec(args)))


def _dump(doc, args) -> None:
    _emit(json.dumps(doc, indent=2) + "\n", args.out)


def cmd_gen(args) -> int:
    _dump(_scenario(args).to_dict(), args)
    return EXIT_OK


def cmd_schedule(args) -> int:
    scenario = _scenario(args)
    cell = run_cell(args.algo, scenario, args.seed if args.seed is not None else "input", args.batch_window)
    if args.format == "csv":
        _emit(render_csv([cell.row()]), args.out)
    else:
        summary = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in cell.row().items()}
        _dump({"summary": summary, "schedule": cell.schedule.to_dicts()}, args)
    return EXIT_OK if cell.valid else EXIT_INVALID


def _cloud(args) -> CloudConfig:
    if not args.config:
        raise ConfigError("--config with a cloud config is required")
    doc = load_document(args.config)
    if isinstance(doc, Mapping) and "cloud" in doc:
        doc = doc["cloud"]
    return CloudConfig.from_dict(doc)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _result_doc(res) -> dict:
    plan = res.plan
    doc = {"best_z": res.best_z, "nodes_explored": res.nodes_explored, "proven_optimal": res.proven_optimal}
    if plan is not None and hasattr(plan, "counts"):
        doc["counts"] = {t: list(v) for t, v in plan.counts.items()}
    elif plan is not None:
        doc["rows"] = {t: [list(v) for v in rows] for t, rows in plan.rows.items()}
    return doc


def cmd_solve_equal(args) -> int:
    res = solve_equal_length(args.d, args.exec_time, _cloud(args), balanced=args.balanced)
    _dump(_result_doc(res), args)
    return EXIT_OK


def cmd_solve_vary(args) -> int:
    counts = [int(c) for c in _floats(args.counts)]
    sizes = _floats(args.sizes)
    res = solve_varying_length(counts, sizes, _cloud(args))
    _dump(_result_doc(res), args)
    return EXIT_OK


def cmd_oracle(args) -> int:
    scenario = _scenario(args)
    bow = BagOfWorkloads(tuple(w.bow_view() for w in scenario.bow))
    res = brute_force_oracle(bow, scenario.config, instances=scenario.instances)
    doc = {
        "best_z": res.best_z,
        "nodes_explored": res.nodes_explored,
        "proven_optimal": res.proven_optimal,
        "assignment": dict(sorted(res.best.mapping.items())),
    }
    if args.check:
        solved = solve_general(bow, scenario.config, instances=scenario.instances)
        doc["solver_z"] = solved.best_z
        doc["agree"] = solved.best_z == res.best_z
    _dump(doc, args)
    return EXIT_OK if doc.get("agree", True) else EXIT_INFEASIBLE


def cmd_validate(args) -> int:
    from .core import Schedule

    scenario = _scenario(args)
    doc = load_document(args.schedule)
    entries = doc["schedule"] if isinstance(doc, Mapping) else doc
    try:
        sched = Schedule.from_dicts(entries)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed schedule: {exc!r}") from None
    workloads: list[Workload] = list(scenario.bow)
    if args.bow:
        workloads = [w.bow_view() for w in workloads]
    problems = validate_schedule(sched, workloads, scenario.instances, scenario.config)
    _dump(
        {
            "valid": not problems,
            "violations": [{"kind": p.kind, "description": p.description} for p in problems],
        },
        args,
    )
    return EXIT_INVALID if problems else EXIT_OK


def cmd_compare(args) -> int:
    if args.config:
        doc = load_document(args.config)
        config = ExperimentConfig.from_dict(doc if doc is not None else {})
    else:
        config = ExperimentConfig()
    changes = config.to_dict()
    changes["gen"] = config.gen
    if args.input:
        changes["gen"] = args.input
    if isinstance(changes["gen"], GenSpec):
        if args.workloads is not None:
            changes["workload_counts"] = [args.workloads]
        if args.instances is not None:
            changes["instance_counts"] = [args.instances]
    if args.seed is not None:
        changes["seeds"] = [args.seed]
    if args.algo:
        changes["algorithms"] = [a for part in args.algo for a in part.split(",") if a]
    if args.batch_window is not None:
        changes["batch_window"] = args.batch_window
    if args.out is not None:
        changes["output"] = args.out
    if args.format is not None:
        changes["format"] = args.format
    config = ExperimentConfig(**changes)
    report = run(config)
    write_report(report, config)
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bowsched", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp, with_input=True):
        sp.add_argument("--config", help="GenSpec (or experiment config) JSON/YAML file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workloads", type=int)
        sp.add_argument("--instances", type=int)
        if with_input:
            sp.add_argument("--input", help="scenario file instead of a generated one")
        sp.add_argument("--out", help="output path (default stdout)")

    sp = sub.add_parser("gen", help="generate a scenario document")
    scenario_args(sp, with_input=False)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("schedule", help="schedule one scenario with one algorithm")
    scenario_args(sp)
    sp.add_argument("--algo", choices=ALGORITHMS, default="edbrs")
    sp.add_argument("--batch-window", type=float)
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("solve-equal", help="optimal plan for d equal workloads")
    sp.add_argument("--config", help="cloud config JSON/YAML file")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--exec-time", type=float, required=True)
    sp.add_argument("--balanced", action="store_true", help="same count on every leased instance of a type")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve_equal)

    sp = sub.add_parser("solve-vary", help="optimal plan for several size classes")
    sp.add_argument("--config", help="cloud config JSON/YAML file")
    sp.add_argument("--counts", required=True, help="workloads per class, e.g. 2,1")
    sp.add_argument("--sizes", required=True, help="class sizes, e.g. 1,3")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve_vary)

    sp = sub.add_parser("oracle", help="exhaustive optimum of a small scenario")
    scenario_args(sp)
    sp.add_argument("--check", action="store_true", help="also run the solver and compare")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("compare", help="run an experiment matrix and write the summary")
    sp.add_argument("--config", help="experiment config JSON/YAML file")
    sp.add_argument("--input", help="scenario file instead of generated ones")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workloads", type=int)
    sp.add_argument("--instances", type=int)
    sp.add_argument("--algo", action="append", help="algorithm(s), repeatable or comma-separated")
    sp.add_argument("--batch-window", type=float)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"))
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("validate", help="check a schedule file against a scenario")
    scenario_args(sp)
    sp.add_argument("--schedule", required=True, help="schedule JSON (list of entries or {'schedule': [...]})")
    sp.add_argument("--bow", action="store_true", help="treat workloads as single operations")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidModel, InfeasibleSpec, TooLargeForOracle, NoEligibleResource) as exc:
        print(f"bowsched: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Infeasible, SearchBudgetExceeded) as exc:
        print(f"bowsched: solver: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
