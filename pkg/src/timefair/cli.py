"""Command-line orchestration: run experiments, analyze logs, audit
manifests, and replay the built-in virtual-time comparison scenario.

Progress goes to stderr, data and tables to stdout. Exit codes are a
stable contract: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from pathlib import Path
from typing import Optional

from . import __version__, metrics, report
from .clock import ClockSpec
from .core import Budget, CostMatrix, TargetSpec
from .metrics import (
    DEFAULT_BOOTSTRAP_SAMPLES,
    DEFAULT_CONFIDENCE,
    DEFAULT_GRID_POINTS,
    DEFAULT_RELATIVE_LADDER,
)
from .problems import get_problem
from .protocol import (
    AlgorithmSpec,
    ExperimentPlan,
    PlanError,
    best_of_restarts,
    build_algorithm,
    run_plan,
)
from .seeds import subseed

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the field."""


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, path: str, required: tuple, optional: tuple) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path} must be an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s): {', '.join(unknown)}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ConfigError(f"{path}: missing required key(s): {', '.join(missing)}")


def _number(value, path: str, *, positive: bool = False, nonnegative: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number")
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{path} must be > 0")
    if nonnegative and value < 0:
        raise ConfigError(f"{path} must be >= 0")
    return value


def _integer(value, path: str, *, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path} must be >= {minimum}")
    return value


def _label_ok(label: str) -> bool:
    return bool(label) and all(c.isalnum() or c in "._-" for c in label) and label[0].isalnum()


def validate_config(raw: dict) -> dict:
    """Strict-schema validation; returns the effective configuration with
    every default materialized (the dumped copy is what gets hashed)."""
    _check_keys(
        raw,
        "config",
        required=("budget", "master_seed", "algorithms", "instances", "clock"),
        optional=("output_dir", "targets", "repetitions", "metrics", "parallel", "tuning"),
    )
    budget_raw = raw["budget"]
    _check_keys(budget_raw, "budget", required=("wall_time_limit",), optional=("eval_cap",))
    budget = {
        "wall_time_limit": _number(budget_raw["wall_time_limit"], "budget.wall_time_limit", positive=True),
        "eval_cap": None
        if budget_raw.get("eval_cap") is None
        else _integer(budget_raw["eval_cap"], "budget.eval_cap", minimum=1),
    }
    if not math.isfinite(budget["wall_time_limit"]):
        raise ConfigError("budget.wall_time_limit must be finite")

    targets = None
    if raw.get("targets") is not None:
        t = raw["targets"]
        _check_keys(t, "targets", required=("kind",), optional=("values",))
        kind = t["kind"]
        if kind not in ("absolute", "relative"):
            raise ConfigError("targets.kind must be 'absolute' or 'relative'")
        if "values" in t:
            values = t["values"]
            if not isinstance(values, list) or not values:
                raise ConfigError("targets.values must be a non-empty list")
            values = [_number(v, "targets.values[]") for v in values]
        elif kind == "relative":
            values = list(DEFAULT_RELATIVE_LADDER)
        else:
            raise ConfigError("targets.values is required for absolute targets")
        targets = {"kind": kind, "values": values}
        try:
            TargetSpec(kind=kind, values=tuple(values))
        except ValueError as exc:
            raise ConfigError(f"targets.values: {exc}") from exc

    clock_raw = raw["clock"]
    _check_keys(
        clock_raw, "clock", required=("mode",), optional=("cost_per_eval", "iteration_overhead")
    )
    mode = clock_raw["mode"]
    if mode not in ("real", "virtual"):
        raise ConfigError("clock.mode must be 'real' or 'virtual'")
    overhead = clock_raw.get("iteration_overhead", {})
    if not isinstance(overhead, dict):
        raise ConfigError("clock.iteration_overhead must be an object")
    clock = {
        "mode": mode,
        "cost_per_eval": _number(
            clock_raw.get("cost_per_eval", 0.0), "clock.cost_per_eval", nonnegative=True
        ),
        "iteration_overhead": {
            k: _number(v, f"clock.iteration_overhead.{k}", nonnegative=True)
            for k, v in overhead.items()
        },
    }
    if mode == "real" and (clock["cost_per_eval"] > 0 or clock["iteration_overhead"]):
        raise ConfigError("clock: synthetic costs require clock.mode 'virtual'")

    algorithms_raw = raw["algorithms"]
    if not isinstance(algorithms_raw, list) or not algorithms_raw:
        raise ConfigError("algorithms must be a non-empty list")
    algorithms = []
    for i, entry in enumerate(algorithms_raw):
        path = f"algorithms[{i}]"
        _check_keys(entry, path, required=("label", "kind"), optional=("params", "wrappers"))
        label = entry["label"]
        if not isinstance(label, str) or not _label_ok(label):
            raise ConfigError(f"{path}.label must be a filesystem-safe identifier")
        params = entry.get("params", {})
        wrappers = entry.get("wrappers", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{path}.params must be an object")
        _check_keys(
            dict(wrappers), f"{path}.wrappers", required=(), optional=("stagnation_restart", "synthetic_overhead")
        )
        if "synthetic_overhead" in wrappers:
            _number(wrappers["synthetic_overhead"], f"{path}.wrappers.synthetic_overhead", nonnegative=True)
        if "stagnation_restart" in wrappers:
            _check_keys(
                wrappers["stagnation_restart"],
                f"{path}.wrappers.stagnation_restart",
                required=("plateau_window", "plateau_epsilon"),
                optional=("max_restarts",),
            )
        algorithms.append(
            {"label": label, "kind": entry["kind"], "params": params, "wrappers": dict(wrappers)}
        )

    instances = raw["instances"]
    if not isinstance(instances, list) or not instances:
        raise ConfigError("instances must be a non-empty list")

    metrics_raw = raw.get("metrics", {})
    _check_keys(
        metrics_raw,
        "metrics",
        required=(),
        optional=("time_grid_points", "bootstrap_samples", "confidence"),
    )
    metric_options = {
        "time_grid_points": _integer(
            metrics_raw.get("time_grid_points", DEFAULT_GRID_POINTS), "metrics.time_grid_points", minimum=2
        ),
        "bootstrap_samples": _integer(
            metrics_raw.get("bootstrap_samples", DEFAULT_BOOTSTRAP_SAMPLES),
            "metrics.bootstrap_samples",
            minimum=100,
        ),
        "confidence": _number(metrics_raw.get("confidence", DEFAULT_CONFIDENCE), "metrics.confidence"),
    }
    if not 0.0 < metric_options["confidence"] < 1.0:
        raise ConfigError("metrics.confidence must lie in (0, 1)")

    tuning = raw.get("tuning")
    if tuning is not None:
        _check_keys(tuning, "tuning", required=("method", "seconds"), optional=("amortization",))
        if not isinstance(tuning["seconds"], dict):
            raise ConfigError("tuning.seconds must map solver labels to seconds")
        tuning = {
            "method": tuning["method"],
            "seconds": {
                k: _number(v, f"tuning.seconds.{k}", nonnegative=True)
                for k, v in tuning["seconds"].items()
            },
            "amortization": tuning.get("amortization", "uniform over the instance set"),
        }

    parallel = raw.get("parallel", False)
    if not isinstance(parallel, bool):
        raise ConfigError("parallel must be a boolean")

    return {
        "output_dir": raw.get("output_dir", "timefair-out"),
        "budget": budget,
        "targets": targets,
        "repetitions": _integer(raw.get("repetitions", 1), "repetitions", minimum=1),
        "master_seed": _integer(raw["master_seed"], "master_seed", minimum=0),
        "clock": clock,
        "algorithms": algorithms,
        "instances": list(instances),
        "metrics": metric_options,
        "tuning": tuning,
        "parallel": parallel,
    }


def plan_from_config(config: dict) -> ExperimentPlan:
    try:
        return ExperimentPlan(
            algorithms=tuple(
                AlgorithmSpec(
                    label=a["label"], kind=a["kind"], params=a["params"], wrappers=a["wrappers"]
                )
                for a in config["algorithms"]
            ),
            instances=tuple(config["instances"]),
            budget=Budget(
                wall_time_limit=config["budget"]["wall_time_limit"],
                eval_cap=config["budget"]["eval_cap"],
            ),
            targets=None
            if config["targets"] is None
            else TargetSpec(kind=config["targets"]["kind"], values=tuple(config["targets"]["values"])),
            repetitions=config["repetitions"],
            master_seed=config["master_seed"],
            clock=ClockSpec(
                mode=config["clock"]["mode"],
                cost_per_eval=config["clock"]["cost_per_eval"],
                iteration_overhead=config["clock"]["iteration_overhead"],
            ),
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


# The bundled demo: the built-in scenario at 3 repetitions, a timed PSO
# baseline (10 s/run), a 5x-overhead variant (50 s/run), and plain random
# search, all on Rastrigin d=10 under T = 50 s of virtual time.
DEMO_CONFIG = {
    "output_dir": "timefair-demo-out",
    "budget": {"wall_time_limit": 50.0, "eval_cap": None},
    "targets": {"kind": "absolute", "values": [100.0, 50.0, 20.0, 10.0, 5.0]},
    "repetitions": 3,
    "master_seed": 20260809,
    "clock": {"mode": "virtual", "cost_per_eval": 0.0078125, "iteration_overhead": {}},
    "algorithms": [
        {"label": "pso", "kind": "pso", "params": {"swarm_size": 40, "max_iterations": 32}},
        {
            "label": "pso-heavy",
            "kind": "pso",
            "params": {"swarm_size": 40, "max_iterations": 32},
            "wrappers": {"synthetic_overhead": 1.25},
        },
        {"label": "random-search", "kind": "random-search", "params": {"max_iterations": 1280}},
    ],
    "instances": ["rastrigin-d10"],
    "metrics": {"time_grid_points": 64, "bootstrap_samples": 200, "confidence": 0.95},
}


def demo_config() -> dict:
    return json.loads(json.dumps(DEMO_CONFIG))


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _run_log_path(out_dir: Path, label: str, instance_id: str) -> Path:
    return out_dir / "runs" / label / f"{instance_id}.jsonl"


def cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"config error: {args.config} is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(raw, dict):
        print("config error: top-level config must be a JSON object", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.parallel:
        raw["parallel"] = True
    try:
        config = validate_config(raw)
        plan = plan_from_config(config)
        if config["parallel"] and not plan.clock.is_virtual:
            raise ConfigError("parallel: parallel execution requires clock.mode 'virtual'")
    except (ConfigError, PlanError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    _progress(f"running {len(plan.algorithms)} algorithm(s) on {len(plan.instances)} instance(s), "
              f"R={plan.repetitions}, T={plan.budget.wall_time_limit}s ({plan.clock.mode} clock)")
    grouped = run_plan(plan, parallel=config["parallel"], progress=_progress)

    for spec in plan.algorithms:
        params_echo = build_algorithm(spec).describe()
        for instance_id in plan.instances:
            records = grouped[(spec.label, instance_id)]
            report.write_run_log(records, _run_log_path(out_dir, spec.label, instance_id), params=params_echo)
    with open(out_dir / report.EFFECTIVE_CONFIG_NAME, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest = report.build_manifest(
        plan,
        grouped,
        out_dir,
        effective_config=config,
        metric_options=config["metrics"],
        tuning=config["tuning"],
        parallel=config["parallel"],
    )
    report.write_manifest(manifest, out_dir)
    n_runs = sum(len(r) for r in grouped.values())
    _progress(f"wrote {n_runs} run(s) and {report.MANIFEST_NAME} to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _load_experiment(out_dir: Path) -> dict:
    config_path = out_dir / report.EFFECTIVE_CONFIG_NAME
    if not config_path.exists():
        raise FileNotFoundError(f"{config_path} not found; run the experiment first")
    with open(config_path, encoding="utf-8") as fh:
        return json.load(fh)


def _parse_amortize(values: Optional[list[str]]) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in values or []:
        label, sep, seconds = item.partition("=")
        if not sep:
            raise ConfigError(f"--amortize expects <solver>=<seconds>, got {item!r}")
        try:
            out[label] = float(seconds)
        except ValueError as exc:
            raise ConfigError(f"--amortize {item!r}: seconds must be a number") from exc
        if out[label] < 0:
            raise ConfigError(f"--amortize {item!r}: seconds must be >= 0")
    return out


def cmd_analyze(args) -> int:
    out_dir = Path(args.out_dir)
    try:
        amortize = _parse_amortize(args.amortize)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = _load_experiment(out_dir)
    T = config["budget"]["wall_time_limit"]
    labels = [a["label"] for a in config["algorithms"]]
    instances = list(config["instances"])
    metric_options = config["metrics"]
    unknown = sorted(set(amortize) - set(labels))
    if unknown:
        print(f"config error: --amortize names unknown solver(s): {', '.join(unknown)}", file=sys.stderr)
        return EXIT_CONFIG

    grouped: dict[tuple[str, str], list] = {}
    total_issues = []
    for label in labels:
        for instance_id in instances:
            path = _run_log_path(out_dir, label, instance_id)
            if not path.exists():
                raise FileNotFoundError(f"missing run log {path}")
            parsed = report.parse_run_log(path, strict=args.strict_logs)
            grouped[(label, instance_id)] = parsed.records
            total_issues.extend(f"{path.name}: {msg}" for msg in parsed.issues)
            if parsed.skipped_runs:
                _progress(f"{path}: skipped {parsed.skipped_runs} malformed run(s)")
    for msg in total_issues:
        _progress(f"log issue: {msg}")

    targets_cfg = config["targets"]
    curves_dir = out_dir / "curves"
    curves_dir.mkdir(parents=True, exist_ok=True)
    grid = metrics.default_time_grid(T, metric_options["time_grid_points"])
    bootstrap_seed = subseed(config["master_seed"], 1)

    # median trajectories: one CSV per instance, all solvers
    for instance_id in instances:
        med_curves = {}
        for label in labels:
            records = grouped[(label, instance_id)]
            if records:
                med_curves[label] = metrics.median_trajectory(
                    records,
                    grid,
                    bootstrap_samples=metric_options["bootstrap_samples"],
                    confidence=metric_options["confidence"],
                    seed=bootstrap_seed,
                )
        report.emit_median_csv(med_curves, curves_dir / f"median_{instance_id}.csv")

    if targets_cfg is None:
        print("no targets configured: wrote median trajectories only")
        return EXIT_OK

    spec = TargetSpec(kind=targets_cfg["kind"], values=tuple(targets_cfg["values"]))
    targets_by_instance = {
        instance_id: spec.resolve(get_problem(instance_id).f_opt) for instance_id in instances
    }

    ert_rows = []
    ert_by = {}
    for label in labels:
        for instance_id in instances:
            records = grouped[(label, instance_id)]
            for q in targets_by_instance[instance_id]:
                times = [metrics.time_to_target(r, q, T) for r in records]
                result = metrics.ert(times, T, target=q) if times else None
                if result is None:
                    continue
                ert_by[(label, instance_id, q)] = result
                ert_rows.append(
                    {
                        "solver": label,
                        "instance": instance_id,
                        "target": q,
                        "ert": result.ert,
                        "successes": result.successes,
                        "runs": result.runs,
                        "success_rate": result.success_rate,
                    }
                )
    report.emit_ert_table(ert_rows, out_dir / "ert_table.csv")

    for label in labels:
        all_records = [r for instance_id in instances for r in grouped[(label, instance_id)]]
        if all_records:
            curve = metrics.anytime_ecdf(all_records, targets_by_instance, grid)
            report.emit_ecdf_csv(curve, curves_dir / f"ecdf_{label}.csv")

    # one profile per target position in the ladder (time cost = ERT)
    n_targets = len(targets_cfg["values"])
    for k in range(n_targets):
        rows = []
        for instance_id in instances:
            q = targets_by_instance[instance_id][k]
            rows.append(
                tuple(
                    ert_by[(label, instance_id, q)].ert if (label, instance_id, q) in ert_by else math.inf
                    for label in labels
                )
            )
        if any(c == 0.0 for row in rows for c in row):
            raise RuntimeError(
                "time-based profiles need positive time costs; "
                "got an ERT of zero (virtual cost_per_eval = 0?)"
            )
        costs = CostMatrix(solvers=tuple(labels), instances=tuple(instances), costs=tuple(rows))
        if amortize:
            costs = metrics.amortize_tuning(costs, amortize)
        curves = metrics.performance_profile(costs)
        ladder_value = targets_cfg["values"][k]
        suffix = f"{ladder_value:g}".replace(".", "p").replace("-", "m")
        report.emit_profile_csv(curves, curves_dir / f"profile_target_{suffix}.csv")

    print(f"{'solver':<16} {'instance':<18} {'target':>10} {'ert':>12} {'success':>8}")
    for row in ert_rows:
        ert_text = "inf" if math.isinf(row["ert"]) else f"{row['ert']:.6g}"
        print(
            f"{row['solver']:<16} {row['instance']:<18} {row['target']:>10.6g} "
            f"{ert_text:>12} {row['success_rate']:>8.2f}"
        )
    _progress(f"wrote ert_table.csv and curves/ to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    out_dir = Path(args.out_dir)
    manifest_path = out_dir / report.MANIFEST_NAME
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    items = report.audit_manifest(manifest, out_dir)
    for item in items:
        note = f" — {item.note}" if item.note else ""
        print(f"item {item.number} ({item.name}): {item.status}{note}")
    verdict = report.manifest_verdict(items)
    print(f"checklist verdict: {verdict}")
    return EXIT_OK if verdict != "FAIL" else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SCENARIO_SEED = 20260809
SCENARIO_TARGETS = (100.0, 50.0, 20.0, 10.0, 5.0)


def scenario_plan(repetitions: int = 20) -> ExperimentPlan:
    """PSO baseline at 10 s/run vs a 5x-overhead variant at 50 s/run on
    Rastrigin d=10 under T = 50 s of virtual time (costs are dyadic, so
    run durations are float-exact)."""
    return ExperimentPlan(
        algorithms=(
            AlgorithmSpec(label="pso", kind="pso", params={"swarm_size": 40, "max_iterations": 32}),
            AlgorithmSpec(
                label="pso-heavy",
                kind="pso",
                params={"swarm_size": 40, "max_iterations": 32},
                wrappers={"synthetic_overhead": 1.25},
            ),
        ),
        instances=("rastrigin-d10",),
        budget=Budget(wall_time_limit=50.0),
        targets=TargetSpec(kind="absolute", values=SCENARIO_TARGETS),
        repetitions=repetitions,
        master_seed=SCENARIO_SEED,
        clock=ClockSpec(mode="virtual", cost_per_eval=0.0078125),
    )


def _ert_bruteforce(times: list[Optional[float]], T: float) -> float:
    total = 0.0
    successes = 0
    for t in times:
        if t is None:
            total += T
        else:
            total += t if t < T else T
            successes += 1
    return total / successes if successes else math.inf


def cmd_simulate(args) -> int:
    plan = scenario_plan()
    _progress("simulating: PSO baseline (10 s/run) vs heavy variant (50 s/run), "
              "T=50 s virtual, Rastrigin d=10, R=20")
    grouped = run_plan(plan)
    T = plan.budget.wall_time_limit
    instance_id = plan.instances[0]

    print("scenario: T=50s virtual, rastrigin-d10, R=20, targets "
          + ", ".join(f"{q:g}" for q in SCENARIO_TARGETS))
    print()
    print(f"{'algorithm':<12} {'runs/rep':>9} {'median single-run':>18} {'median best-of-restarts':>24}")
    best_samples = {}
    for spec in plan.algorithms:
        records = grouped[(spec.label, instance_id)]
        runs_per_rep = len(records) // plan.repetitions
        single = [
            r.final_best for r in records if r.run_index == 0
        ]
        best_of = [
            best_of_restarts([r for r in records if r.repetition == rep])
            for rep in range(plan.repetitions)
        ]
        best_samples[spec.label] = best_of
        print(
            f"{spec.label:<12} {runs_per_rep:>9} {statistics.median(single):>18.4f} "
            f"{statistics.median(best_of):>24.4f}"
        )
    print()
    print(f"{'algorithm':<12} {'target':>8} {'ert':>12} {'success':>8}  recheck")
    for spec in plan.algorithms:
        records = grouped[(spec.label, instance_id)]
        for q in SCENARIO_TARGETS:
            times = [metrics.time_to_target(r, q, T) for r in records]
            result = metrics.ert(times, T, target=q)
            oracle = _ert_bruteforce(times, T)
            agree = (
                math.isinf(result.ert) and math.isinf(oracle)
            ) or math.isclose(result.ert, oracle, rel_tol=1e-12)
            ert_text = "inf" if math.isinf(result.ert) else f"{result.ert:.4f}"
            print(
                f"{spec.label:<12} {q:>8g} {ert_text:>12} {result.success_rate:>8.2f}  "
                f"{'ok' if agree else 'MISMATCH'}"
            )
    test = metrics.rank_sum_test(best_samples["pso"], best_samples["pso-heavy"])
    print()
    print(
        f"rank-sum test (best-of-restarts, pso vs pso-heavy): U={test.statistic:g}, "
        f"p={test.p_value:.4g} [{test.method}]"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timefair",
        description="Benchmark black-box optimizers under a fixed wall-clock budget.",
    )
    parser.add_argument("--version", action="version", version=f"timefair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment plan from a config file")
    p_run.add_argument("--config", required=True, help="path to the JSON experiment config")
    p_run.add_argument("--out", help="output directory (overrides config output_dir)")
    p_run.add_argument("--seed", type=int, help="override the master seed (re-derives all run seeds)")
    p_run.add_argument(
        "--parallel", action="store_true", help="run repetitions in parallel (virtual clock only)"
    )
    p_run.set_defaults(func=cmd_run)

    p_analyze = sub.add_parser("analyze", help="compute metrics and curve CSVs from run logs")
    p_analyze.add_argument("out_dir", help="experiment output directory")
    p_analyze.add_argument(
        "--strict-logs", action="store_true", help="abort on the first malformed log line"
    )
    p_analyze.add_argument(
        "--amortize",
        action="append",
        metavar="SOLVER=SECONDS",
        help="add amortized tuning time to a solver's profile costs (repeatable)",
    )
    p_analyze.set_defaults(func=cmd_analyze)

    p_report = sub.add_parser("report", help="audit the manifest against the reporting checklist")
    p_report.add_argument("out_dir", help="experiment output directory")
    p_report.set_defaults(func=cmd_report)

    p_sim = sub.add_parser("simulate", help="run the built-in deterministic comparison scenario")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlanError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure: diagnostic + exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
