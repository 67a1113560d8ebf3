"""Command-line entry point.

    kurasync simulate CONFIG.json
    kurasync classify TRAJECTORY.csv SYSTEM.json [--classifier CLF.json]
    kurasync thresholds SYSTEM.json
    kurasync equilibria SYSTEM.json [--grid 16] [--tol 1e-12]
    kurasync sweep CONFIG.json --lambdas 0.5,1,2 [--out table.csv] [--jobs 1]

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from . import __version__
from .analysis import ClassifierConfig, classify
from .equilibria import count_vs_bound, find_equilibria
from .integrator import IntegrationError
from .model import ValidationError
from .runner import (
    ConfigError,
    ExperimentConfig,
    load_system_json,
    read_trajectory_csv,
    run_experiment,
    sweep_coupling,
    sweep_table,
    threshold_summary,
    verdict_dict,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2, reserved for numerical aborts
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kurasync", description="Kuramoto synchronization experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one experiment config")
    p.add_argument("config")

    p = sub.add_parser("classify", help="classify a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("system")
    p.add_argument("--classifier", help="JSON file with ClassifierConfig fields")

    p = sub.add_parser("thresholds", help="critical coupling report for a system")
    p.add_argument("system")

    p = sub.add_parser("equilibria", help="enumerate equilibria of the phase-difference system")
    p.add_argument("system")
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("sweep", help="rerun a uniform-coupling config over several lambdas")
    p.add_argument("config")
    p.add_argument("--lambdas", required=True, help="comma-separated coupling strengths")
    p.add_argument("--out", help="write the CSV table here instead of stdout")
    p.add_argument("--jobs", type=int, default=1)
    return ap


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _cmd_simulate(args) -> int:
    summary = run_experiment(ExperimentConfig.load(args.config))
    _emit(summary.to_dict())
    return EXIT_OK


def _cmd_classify(args) -> int:
    system = load_system_json(args.system)
    cfg = ClassifierConfig()
    if args.classifier:
        with open(args.classifier) as fh:
            cfg = ClassifierConfig(**json.load(fh))
    traj = read_trajectory_csv(args.trajectory, system)
    _emit(verdict_dict(classify(traj, cfg), system))
    return EXIT_OK


def _cmd_thresholds(args) -> int:
    system = load_system_json(args.system)
    _emit(threshold_summary(system, raw=system))
    return EXIT_OK


def _cmd_equilibria(args) -> int:
    eq = find_equilibria(load_system_json(args.system), grid_per_dim=args.grid, tol=args.tol)
    _emit({"roots": eq.to_list(), **count_vs_bound(eq), "seeds": eq.seeds, "notes": eq.notes})
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        lambdas = [float(x) for x in args.lambdas.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad --lambdas value {args.lambdas!r}") from None
    summaries = sweep_coupling(ExperimentConfig.load(args.config), lambdas, jobs=args.jobs)
    table = sweep_table(lambdas, summaries)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "classify": _cmd_classify,
    "thresholds": _cmd_thresholds,
    "equilibria": _cmd_equilibria,
    "sweep": _cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except IntegrationError as exc:
        print(f"kurasync: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ConfigError, ValidationError, json.JSONDecodeError, TypeError, ValueError) as exc:
        print(f"kurasync: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
