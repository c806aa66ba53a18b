import argparse
from argparse import _SubParsersAction
from dataclasses import replace

from viscowave.fields import SpaceTimeField
from viscowave.picard import continue_solution
from viscowave.utils import echo, output_dir, output_formats, require_config


def write_field(field: SpaceTimeField, args: argparse.Namespace) -> list[str]:
    target = output_dir(args)
    written = []
    if "csv" in output_formats(args):
        field.to_csv(target / "field.csv")
        written.append(str(target / "field.csv"))
    if "json" in output_formats(args):
        field.to_json(target / "field.json")
        written.append(str(target / "field.json"))
    return written


def register(subparsers: _SubParsersAction):
    parser: argparse.ArgumentParser = subparsers.add_parser(
        "solve",
        help="Solve the nonlinear problem by windowed fixed-point iteration",
    )
    parser.add_argument(
        "--theta",
        type=float,
        help="Window safety factor in (0, 1); overrides solver.theta",
    )
    return parser


def execute(args: argparse.Namespace):
    config = require_config(args)
    problem = config.problem()
    solver_config = config.solver_config(seed=args.seed)
    if args.theta is not None:
        solver_config = replace(solver_config, theta=args.theta)
    field, report = continue_solution(problem, solver_config)
    written = write_field(field, args)
    report_path = output_dir(args) / "report.json"
    report.to_json(report_path)
    iterations = sum(w.iterations for w in report.windows)
    echo(
        args,
        f"Solved on {len(report.windows)} window(s) with {iterations} iterations; "
        f"wrote {', '.join(written + [str(report_path)])}",
    )
