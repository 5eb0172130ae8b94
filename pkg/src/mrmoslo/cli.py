"""Command line entry point: run experiments, fit and threshold single traces, generate traces.

Subcommands::

    mrmoslo run        --hosts 25 --vms 30 --tasks 500 --detector mr-moslo --seed 1
    mrmoslo fit        --trace t.csv --vm 3 [--start 0 --length 12]
    mrmoslo thresholds --trace t.csv --vm 3 [--start 0 --length 12]
    mrmoslo gen        --vms 30 --tasks 500 --seed 7 --out t.csv

``run`` also accepts ``--config FILE`` with flat ``key = value`` lines using
the long flag names (``detector`` and ``seed`` take comma separated lists).
Command line flags override file values.  Exit status is 0 on success, 2 on
a configuration error and 1 on a runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .detection import DetectorConfig, DetectorKind
from .engine import EngineConfig, default_hosts, run_simulation
from .moslo import MosloConfig, run_moslo
from .regression import ResourceWeights, SingularFitError, fit_ols, one_step_rows
from .workload import generate_random_workload, intervals_for_tasks, load_trace, render_trace

REPORT_FIELDS = ("detector", "seed", "energy_kwh", "sla_pct", "slatah", "pdm", "slav", "esv", "migrations")
SCHEMA_VERSION = 1
FIELD_LABELS = {"sla_pct": "sla_violation_pct (capacity-breach definition)"}
DETECTOR_ORDER = [k.value for k in DetectorKind]


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    hosts: int = 25
    vms: int = 30
    tasks: int | None = 500
    detectors: tuple[str, ...] = ("mr-moslo",)
    weights: ResourceWeights = ResourceWeights()
    interval_seconds: float = 300.0
    seeds: tuple[int, ...] = (0,)
    trace: str | None = None
    out: str = "-"
    format: str = "csv"
    mean: float = 0.5
    spread: float = 0.4
    static_threshold: float = 0.8
    safety: float | None = None
    window: int = 12
    target: str = "normalized"
    accounting: str = "pre-migration"
    jobs: int = 1


def _positive_int(key):
    def parse(text):
        try:
            value = int(str(text).strip())
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {text!r}") from None
        if value < 1:
            raise ConfigError(key, f"must be >= 1, got {value}")
        return value
    return parse


def _float_in(key, low, high, low_open=True, high_open=True):
    def parse(text):
        try:
            value = float(str(text).strip())
        except ValueError:
            raise ConfigError(key, f"expected a number, got {text!r}") from None
        ok_low = value > low if low_open else value >= low
        ok_high = value < high if high_open else value <= high
        if not (ok_low and ok_high and math.isfinite(value)):
            raise ConfigError(key, f"{value} out of range")
        return value
    return parse


def _detectors(text):
    items = _split_list(text)
    if not items:
        raise ConfigError("detector", "no detector given")
    for item in items:
        if item not in DETECTOR_ORDER:
            raise ConfigError("detector", f"unknown detector {item!r}; choose from {', '.join(DETECTOR_ORDER)}")
    return tuple(dict.fromkeys(items))


def _seeds(text):
    items = _split_list(text)
    if not items:
        raise ConfigError("seed", "seed list is empty")
    try:
        return tuple(int(s) for s in items)
    except ValueError:
        raise ConfigError("seed", f"seeds must be integers, got {text!r}") from None


def _weights(text):
    parts = _split_list(text)
    if len(parts) != 3:
        raise ConfigError("weights", "expected three comma separated weights w1,w2,w3")
    try:
        return ResourceWeights(*(float(p) for p in parts))
    except ValueError as exc:
        raise ConfigError("weights", str(exc)) from None


def _choice(key, options):
    def parse(text):
        value = str(text).strip()
        if value not in options:
            raise ConfigError(key, f"{value!r} not one of {', '.join(options)}")
        return value
    return parse


def _split_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        out = []
        for t in text:
            out.extend(_split_list(t))
        return out
    return [p.strip() for p in str(text).split(",") if p.strip()]


KEYS = {
    "hosts": ("hosts", _positive_int("hosts")),
    "vms": ("vms", _positive_int("vms")),
    "tasks": ("tasks", _positive_int("tasks")),
    "detector": ("detectors", _detectors),
    "weights": ("weights", _weights),
    "interval": ("interval_seconds", _float_in("interval", 0, math.inf)),
    "seed": ("seeds", _seeds),
    "trace": ("trace", str),
    "out": ("out", str),
    "format": ("format", _choice("format", ("csv", "json"))),
    "mean": ("mean", _float_in("mean", 0, 1)),
    "spread": ("spread", _float_in("spread", 0, 1, low_open=False, high_open=False)),
    "threshold": ("static_threshold", _float_in("threshold", 0, 1)),
    "safety": ("safety", _float_in("safety", 1, math.inf, low_open=False)),
    "window": ("window", _positive_int("window")),
    "target": ("target", _choice("target", ("normalized", "raw_y"))),
    "accounting": ("accounting", _choice("accounting", ("pre-migration", "post-migration"))),
    "jobs": ("jobs", _positive_int("jobs")),
}


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}", "expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, "unknown configuration key")
        values[key] = value
    return values


def build_experiment_config(values: dict) -> ExperimentConfig:
    """Validate raw key/value settings into an `ExperimentConfig`."""
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    if values.get("trace") and values.get("tasks") is not None:
        raise ConfigError("trace", "a trace file and a synthetic --tasks length are mutually exclusive")
    kwargs = {}
    for key, raw in values.items():
        if raw is None:
            continue
        attr, parse = KEYS[key]
        kwargs[attr] = parse(raw)
    if kwargs.get("trace"):
        kwargs["tasks"] = None
    config = ExperimentConfig(**kwargs)
    if config.window < 2:
        raise ConfigError("window", "must be >= 2")
    return config


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--hosts", help="number of hosts (default 25)")
    p.add_argument("--vms", help="number of VMs in the synthetic workload (default 30)")
    p.add_argument(
        "--tasks",
        help="synthetic workload size in VM-interval rows; the trace gets ceil(tasks/vms) intervals (default 500)",
    )
    p.add_argument("--detector", action="append", help=f"one of {', '.join(DETECTOR_ORDER)}; repeatable or comma separated")
    p.add_argument("--selector", default="max-corr", choices=["max-corr"], help="VM selection policy")
    p.add_argument("--weights", help="resource weights w1,w2,w3 in (0,1] (default 1,1,1)")
    p.add_argument("--interval", help="scheduling interval in seconds (default 300)")
    p.add_argument("--seed", action="append", help="random seed; repeatable")
    p.add_argument("--trace", help="CSV trace time,vm_id,cpu,ram,bw instead of a synthetic workload")
    p.add_argument("--out", help="report path, '-' for stdout")
    p.add_argument("--format", help="csv or json")
    p.add_argument("--mean", help="synthetic workload mean utilization (default 0.5)")
    p.add_argument("--spread", help="synthetic workload half-width (default 0.4)")
    p.add_argument("--threshold", help="THR static threshold (default 0.8)")
    p.add_argument("--safety", help="IQR/MAD/LR safety parameter (defaults 1.5/2.5/1.2)")
    p.add_argument("--window", help="history window in intervals (default 12)")
    p.add_argument("--target", help="regression target: normalized or raw_y")
    p.add_argument("--accounting", help="pre-migration (default) or post-migration")
    p.add_argument("--jobs", help="parallel simulation processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrmoslo", description="VM consolidation with MR-MOSLO host overload detection")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("run", help="simulate and write a metrics report"))

    for name, help_text in (("fit", "fit the load regression on one VM trace window"),
                            ("thresholds", "select adaptive thresholds on one VM trace window")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--trace", required=True)
        p.add_argument("--vm", help="VM id (default: first VM in the trace)")
        p.add_argument("--start", type=int, default=0)
        p.add_argument("--length", type=int, default=12)
        p.add_argument("--weights", default="1,1,1")
        if name == "fit":
            p.add_argument("--target", default="normalized", choices=["normalized", "raw_y"])
        else:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--iterations", type=int, default=MosloConfig.max_iterations)

    p = sub.add_parser("gen", help="write a synthetic trace CSV")
    p.add_argument("--vms", default="30")
    p.add_argument("--tasks", default="500", help="VM-interval rows; intervals = ceil(tasks/vms)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean", default="0.5")
    p.add_argument("--spread", default="0.4")
    p.add_argument("--interval", default="300")
    p.add_argument("--out", default="-")
    return parser


def parse_config(argv: Sequence[str], config_file: str | None = None) -> ExperimentConfig:
    """Parse ``run`` arguments (with or without the leading ``run``)."""
    argv = list(argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    parser = argparse.ArgumentParser(prog="mrmoslo run")
    _add_run_flags(parser)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        raise ConfigError("arguments", "could not parse command line") from exc
    return _config_from_args(args, config_file)


def _config_from_args(args: argparse.Namespace, config_file: str | None = None) -> ExperimentConfig:
    values: dict = {}
    path = config_file or getattr(args, "config", None)
    if path:
        values.update(read_config_file(path))
    for key in KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "trace" in values and "tasks" in values and values["trace"]:
        raise ConfigError("trace", "a trace file and a synthetic --tasks length are mutually exclusive")
    return build_experiment_config(values)


def detector_config(config: ExperimentConfig, kind: str) -> DetectorConfig:
    return DetectorConfig(
        kind=DetectorKind(kind),
        static_threshold=config.static_threshold,
        safety=config.safety,
        weights=config.weights,
        target=config.target,
    )


def _run_one(config: ExperimentConfig, kind: str, seed: int) -> dict:
    if config.trace:
        with open(config.trace, encoding="utf-8") as fh:
            trace = load_trace(fh)
        interval = trace.interval_seconds
    else:
        trace = generate_random_workload(
            seed, config.vms, intervals_for_tasks(config.tasks, config.vms),
            config.mean, config.spread, config.interval_seconds,
        )
        interval = config.interval_seconds
    engine = EngineConfig(
        host_specs=default_hosts(config.hosts),
        detector=detector_config(config, kind),
        interval_seconds=interval,
        window=config.window,
        seed=seed,
        accounting=config.accounting,
    )
    try:
        result = run_simulation(engine, trace)
    except Exception as exc:
        raise RuntimeError(f"seed {seed}, detector {kind}: {exc}") from exc
    return {"detector": kind, "seed": seed, **result.row()}


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """One simulation per (detector, seed); rows in detector order then ascending seed."""
    if not config.seeds:
        raise ConfigError("seed", "seed list is empty")
    detectors = sorted(config.detectors, key=DETECTOR_ORDER.index)
    jobs = [(kind, seed) for kind in detectors for seed in sorted(config.seeds)]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_run_one, config, kind, seed) for kind, seed in jobs]
            return [f.result() for f in futures]
    return [_run_one(config, kind, seed) for kind, seed in jobs]


def _format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_report(report: Sequence[dict], fmt: str = "csv") -> str:
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(REPORT_FIELDS)
        for row in report:
            writer.writerow([_format_value(row[f]) for f in REPORT_FIELDS])
        return out.getvalue()
    if fmt == "json":
        # floats are written with 17 significant digits, so json.dumps is only used for strings
        rows = []
        for row in report:
            items = ", ".join(
                f"{json.dumps(f)}: {json.dumps(row[f]) if isinstance(row[f], str) else _json_number(row[f])}"
                for f in REPORT_FIELDS
            )
            rows.append("    {" + items + "}")
        body = ",\n".join(rows)
        return (
            "{\n"
            f'  "schema_version": {SCHEMA_VERSION},\n'
            f'  "fields": {json.dumps(list(REPORT_FIELDS))},\n'
            f'  "labels": {json.dumps(FIELD_LABELS)},\n'
            '  "rows": [' + ("\n" + body + "\n  " if rows else "") + "]\n"
            "}\n"
        )
    raise ValueError(f"unknown report format {fmt!r}")


def _json_number(value) -> str:
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        text = format(value, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    return str(value)


def emit_report(report: Sequence[dict], fmt: str = "csv", path: str | Path = "-") -> str:
    text = render_report(report, fmt)
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise RuntimeError(f"cannot write report to {path}: {exc}") from exc
    return text


def _trace_window(args):
    with open(args.trace, encoding="utf-8") as fh:
        trace = load_trace(fh)
    vm = args.vm or trace.vm_ids[0]
    if vm not in trace.series:
        raise ConfigError("vm", f"vm {vm!r} not in trace")
    if args.start < 0 or args.length < 1:
        raise ConfigError("start", "need start >= 0 and length >= 1")
    window = trace.series[vm][args.start:args.start + args.length]
    if not window:
        raise ConfigError("start", "window lies outside the trace")
    return vm, window


def _cmd_fit(args) -> int:
    vm, window = _trace_window(args)
    model = fit_ols(one_step_rows(window, _weights(args.weights), args.target))
    print(f"vm={vm} rows={model.n_samples}")
    for name, value in zip(("b0", "b1", "b2", "b3"), model.coefficients):
        print(f"{name} = {value:.17g}")
    return 0


def _cmd_thresholds(args) -> int:
    import numpy as np

    vm, window = _trace_window(args)
    moslo = replace(MosloConfig(), max_iterations=args.iterations, rng_seed=args.seed)
    result = run_moslo(window, moslo, np.random.default_rng(args.seed))
    print(f"vm={vm} samples={len(window)} candidates={len(result.candidates)}")
    print(f"th_low = {result.thresholds.th_low:.17g}")
    print(f"th_upper = {result.thresholds.th_upper:.17g}")
    return 0


def _cmd_gen(args) -> int:
    vms = _positive_int("vms")(args.vms)
    tasks = _positive_int("tasks")(args.tasks)
    trace = generate_random_workload(
        args.seed, vms, intervals_for_tasks(tasks, vms),
        _float_in("mean", 0, 1)(args.mean),
        _float_in("spread", 0, 1, False, False)(args.spread),
        _float_in("interval", 0, math.inf)(args.interval),
    )
    text = render_trace(trace)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        if args.command == "run":
            config = _config_from_args(args)
            emit_report(run_experiment(config), config.format, config.out)
            return 0
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "thresholds":
            return _cmd_thresholds(args)
        if args.command == "gen":
            return _cmd_gen(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SingularFitError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
