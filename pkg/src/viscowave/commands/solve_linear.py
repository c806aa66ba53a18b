import argparse
from argparse import _SubParsersAction

from viscowave.commands.solve import write_field
from viscowave.potentials import PotentialConfig, linear_solve
from viscowave.utils import echo, require_config


def register(subparsers: _SubParsersAction):
    parser: argparse.ArgumentParser = subparsers.add_parser(
        "solve-linear",
        help="Evaluate the explicit solution for a right-hand side independent of u",
    )
    return parser


def execute(args: argparse.Namespace):
    config = require_config(args)
    problem = config.problem()
    field = linear_solve(
        problem.rhs.as_source(),
        problem.f0,
        problem.f1,
        problem.grid,
        problem.params,
        PotentialConfig(quad=config.quadrature()),
    )
    written = write_field(field, args)
    echo(args, f"Wrote {', '.join(written)}")
