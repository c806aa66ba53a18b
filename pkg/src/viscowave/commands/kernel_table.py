import argparse
import csv
from argparse import _SubParsersAction

from viscowave.kernel import KernelEvaluator, KernelPath
from viscowave.utils import echo, output_dir, require_config

COLUMNS = ["x", "t", "k", "kx", "kt", "kxx"]


def register(subparsers: _SubParsersAction):
    parser: argparse.ArgumentParser = subparsers.add_parser(
        "kernel-table",
        help="Tabulate the fundamental solution and its derivatives",
    )
    parser.add_argument(
        "--x",
        type=float,
        nargs="+",
        help="Offsets x; defaults to kernel.table_x",
    )
    parser.add_argument(
        "--t",
        type=float,
        nargs="+",
        help="Times t > 0; defaults to kernel.table_t",
    )
    parser.add_argument(
        "--path",
        type=str,
        choices=[p.value for p in KernelPath],
        help="Evaluation path; defaults to kernel.path",
    )
    return parser


def execute(args: argparse.Namespace):
    config = require_config(args)
    evaluator = KernelEvaluator(
        params=config.model_params(),
        quad=config.quadrature(),
        r_switch=config.kernel.r_switch,
        path=KernelPath(args.path or config.kernel.path),
    )
    xs = args.x or list(config.kernel.table_x)
    ts = args.t or list(config.kernel.table_t)
    target = output_dir(args) / "kernel_table.csv"
    with open(target, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(COLUMNS)
        for t in ts:
            for x in xs:
                values = evaluator.derivatives(x, t)
                writer.writerow([repr(float(x)), repr(float(t)), *map(repr, values)])
    echo(args, f"Wrote {len(xs) * len(ts)} kernel values to '{target}'")
