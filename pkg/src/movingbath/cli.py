"""Command-line entry point: ``movingbath run --experiment ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import format_csv, format_json, run_experiment
from .selftest import FAULTS, format_report, run_selftest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="movingbath",
        description="Steady-state thermodynamics of a system moving through a thermal bath.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment sweep or the self-test")
    run.add_argument("--experiment", choices=EXPERIMENTS, help="overrides 'experiment' in the config")
    run.add_argument("--config", type=Path, help="YAML or JSON config file")
    run.add_argument("--seed", type=int, help="seed for Gillespie cross-check columns")
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--beta-grid", help="'start:stop:num[:log|linear]' or comma-separated values")
    run.add_argument("--u", dest="u_list", help="comma-separated velocities")
    run.add_argument("--lambda", dest="lam", type=float, help="coupling strength")
    run.add_argument("--system", help="preset name: delta, battery or two_level")
    run.add_argument("--workers", type=int, help="worker processes for the sweep")
    run.add_argument("--inject-fault", choices=sorted(FAULTS), help=argparse.SUPPRESS)
    return parser


def _selftest(fault, out) -> int:
    results = run_selftest(fault)
    text = format_report(results)
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)
    return 0 if all(c.passed for c in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "seed": args.seed,
        "output": args.out,
        "format": args.format,
        "beta_grid": args.beta_grid,
        "u_list": args.u_list,
        "lambda": args.lam,
        "system": args.system,
        "workers": args.workers,
    }
    if args.config is None and args.experiment is None:
        print("error: give --experiment or a --config that names one", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if config.experiment == "selftest":
        return _selftest(args.inject_fault, config.output)
    try:
        table = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    text = format_csv(table) if config.format == "csv" else format_json(table)
    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
