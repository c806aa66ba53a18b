import argparse
import logging
from argparse import _SubParsersAction

import numpy as np

from viscowave.errors import OracleBandError
from viscowave.oracle import certify
from viscowave.picard import continue_solution
from viscowave.potentials import PotentialConfig, linear_solve
from viscowave.utils import echo, output_dir, require_config, write_json

logger = logging.getLogger(__name__)


def register(subparsers: _SubParsersAction):
    parser: argparse.ArgumentParser = subparsers.add_parser(
        "oracle-compare",
        help="Compare the Green's-function solution with the finite-difference oracle",
    )
    parser.add_argument(
        "--slack",
        type=float,
        default=1e-3,
        help="Allowance added to the certified band (default: 1e-3)",
    )
    return parser


def _gaps(difference: np.ndarray) -> dict:
    return {
        "linf": float(np.max(np.abs(difference))),
        "l2": float(np.sqrt(np.mean(difference**2))),
    }


def execute(args: argparse.Namespace):
    config = require_config(args)
    problem = config.problem()
    if problem.rhs.depends_on_solution:
        field, _ = continue_solution(problem, config.solver_config(seed=args.seed))
        pipeline = "picard"
    else:
        field = linear_solve(
            problem.rhs.as_source(),
            problem.f0,
            problem.f1,
            problem.grid,
            problem.params,
            PotentialConfig(quad=config.quadrature()),
        )
        pipeline = "linear"
    certificate = certify(problem, config.fd_config())
    difference = field.u - certificate.field.u
    excess = np.abs(difference) - certificate.band - args.slack
    passed = bool(np.all(excess <= 0))
    report = {
        "pipeline": pipeline,
        "passed": passed,
        "slack": args.slack,
        "band": {
            "max": certificate.max_band,
            "ux_max": float(np.max(certificate.ux_band)),
            "observed_order": certificate.observed_order,
            "refinement_differences": certificate.differences,
        },
        "u": _gaps(difference),
        "ux": _gaps(field.ux - certificate.field.ux),
        "worst_excess": float(np.max(excess)),
    }
    target = output_dir(args) / "oracle_compare.json"
    write_json(target, report)
    echo(
        args,
        f"Oracle gap {report['u']['linf']:.3e} (band {certificate.max_band:.3e}, "
        f"slack {args.slack:g}): {'pass' if passed else 'FAIL'}",
    )
    if not passed:
        raise OracleBandError(
            f"Solution leaves the oracle band by {report['worst_excess']:.3e}; "
            f"see '{target}'."
        )
