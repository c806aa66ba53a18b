import argparse
import itertools
import logging
import math
from argparse import _SubParsersAction

import numpy as np

from viscowave.errors import ToleranceError
from viscowave.kernel import (
    KernelChannel,
    ModelParams,
    QuadratureSpec,
    evaluate_channel,
    flux_limit,
    g_time,
    g_time_reduced,
    k_talbot,
    k_time,
    verify_laplace,
    verify_mass,
    verify_moment_identities,
)
from viscowave.utils import echo, output_dir, write_json

logger = logging.getLogger(__name__)

EPSILONS = (0.25, 0.5, 1.0)
AS = (0.5, 1.0, 2.0)
BS = (2.0, 4.0, 8.0)
TIMES = (0.1, 1.0, 3.0)
FLUX_TIMES = (0.1, 0.25, 0.5)
FLUX_A = 0.5
# (r, s, epsilon, a, b)
LAPLACE_SAMPLES = (
    (1.0, 1.0, 1.0, 1.0, 2.0),
    (0.5, 2.0 + 1.0j, 0.5, 0.5, 2.0),
    (0.5, 0.3 + 2.0j, 0.25, 0.5, 8.0),
    (2.0, 0.5, 1.0, 1.0, 4.0),
    (1.0, 3.0, 0.25, 2.0, 8.0),
    (0.25, 1.0 + 3.0j, 1.0, 0.5, 4.0),
    (1.5, 0.8 + 0.5j, 0.5, 1.0, 2.0),
    (1.0, 0.4, 0.5, 2.0, 4.0),
    (2.0, 1.5 + 0.5j, 0.25, 0.5, 2.0),
    (0.75, 2.0 + 2.0j, 0.25, 1.0, 4.0),
    (0.5, 5.0, 1.0, 1.0, 8.0),
    (1.0, 0.3, 1.0, 0.5, 2.0),
)
# (epsilon, a, b) for the positivity grid and the dual-path probes
PROBE_MODELS = ((1.0, 1.0, 2.0), (0.5, 0.5, 4.0), (0.25, 2.0, 8.0))
POSITIVITY_GRID = (200, 50)
POSITIVITY_HALF_WIDTH = 4.0
POSITIVITY_HORIZON = 3.0
DUAL_PATH_TIMES = (0.1, 3.0)

MASS_TOL = 1e-6
MOMENT_TOL = 1e-5
LAPLACE_TOL = 1e-6
FLUX_TOL = 1e-3
DUAL_PATH_TOL = 1e-6
POSITIVITY_TOL = 1e-12
DEGENERATE_TOL = 1e-10


def register(subparsers: _SubParsersAction):
    parser: argparse.ArgumentParser = subparsers.add_parser(
        "verify-identities",
        help="Check the mass, moment, Laplace and flux identities of the kernel",
    )
    parser.add_argument(
        "--quick",
        action="store_true",
        help="Check only the configured model instead of the full lattice",
        default=False,
    )
    parser.add_argument(
        "--probes",
        type=int,
        default=500,
        help="Number of random (x, t) points for the dual-path comparison",
    )
    return parser


def _params(epsilon: float, a: float, b: float) -> ModelParams:
    return ModelParams(epsilon=epsilon, c=math.sqrt(b * epsilon), a=a)


def full_lattice() -> list[ModelParams]:
    return [
        _params(e, a, b)
        for e, a, b in itertools.product(EPSILONS, AS, BS)
        if a <= b
    ]


def _record(
    checks: list,
    kind: str,
    params: ModelParams,
    residual: float,
    tol: float,
    **extra,
):
    passed = bool(abs(residual) <= tol)
    checks.append(
        {
            "kind": kind,
            "epsilon": params.epsilon,
            "a": params.a,
            "b": params.b,
            **extra,
            "residual": residual,
            "tolerance": tol,
            "passed": passed,
        }
    )
    if not passed:
        logger.warning(
            "%s check failed: residual %.3e > %.1e %s", kind, residual, tol, extra
        )


def _flux(checks: list, params: ModelParams, t: float):
    flux = flux_limit(t, params)
    relative = (flux.numeric - flux.exact) / abs(flux.exact)
    _record(checks, "flux", params, relative, FLUX_TOL, t=t)


def lattice_checks(lattice: list[ModelParams], quad: QuadratureSpec) -> list[dict]:
    checks: list[dict] = []
    for params, t in itertools.product(lattice, TIMES):
        mass = verify_mass(t, params, quad)
        _record(checks, "mass", params, mass.numeric - mass.exact, MASS_TOL, t=t)
        moments = verify_moment_identities(t, params, quad)
        for name, residual in moments._asdict().items():
            _record(checks, f"moment-{name}", params, residual, MOMENT_TOL, t=t)
    return checks


def positivity_checks(checks: list):
    nx, nt = POSITIVITY_GRID
    x = np.linspace(-POSITIVITY_HALF_WIDTH, POSITIVITY_HALF_WIDTH, nx)
    times = np.linspace(POSITIVITY_HORIZON / nt, POSITIVITY_HORIZON, nt)
    for model in PROBE_MODELS:
        params = _params(*model)
        lowest = min(
            float(evaluate_channel(KernelChannel.K, x, t, params).min()) for t in times
        )
        _record(
            checks,
            "nonnegative",
            params,
            min(lowest, 0.0),
            POSITIVITY_TOL,
            minimum=lowest,
            points=nx * nt,
        )


def dual_path_checks(checks: list, quad: QuadratureSpec, probes: int, seed: int):
    """Compare both kernel paths at random points inside the kernel support."""
    rng = np.random.default_rng(seed)
    for index in range(probes):
        params = _params(*PROBE_MODELS[index % len(PROBE_MODELS)])
        t = float(rng.uniform(*DUAL_PATH_TIMES))
        reach = params.c * t + 2.0 * math.sqrt(params.epsilon * t)
        x = float(rng.uniform(-reach, reach))
        slow, fast = k_time(x, t, params, quad), k_talbot(x, t, params)
        relative = (slow - fast) / fast
        _record(checks, "dual-path", params, relative, DUAL_PATH_TOL, x=x, t=t)


def run_checks(
    lattice: list[ModelParams],
    quad: QuadratureSpec,
    full: bool,
    probes: int = 500,
    seed: int = 0,
) -> list[dict]:
    checks = lattice_checks(lattice, quad)
    if not full:
        for params, t in itertools.product(lattice, FLUX_TIMES):
            _flux(checks, params, t)
        return checks
    flux_cases = itertools.product(BS, EPSILONS)
    for (b, epsilon), t in zip(flux_cases, itertools.cycle(FLUX_TIMES)):
        _flux(checks, _params(epsilon, FLUX_A, b), t)
    for r, s, epsilon, a, b in LAPLACE_SAMPLES:
        params = _params(epsilon, a, b)
        error = verify_laplace(r, [s], params, quad)
        _record(checks, "laplace", params, error, LAPLACE_TOL, r=r, s=str(s))
    positivity_checks(checks)
    dual_path_checks(checks, quad, probes, seed)
    degenerate = _params(1.0, 1.0, 1.0)
    for r, t in ((0.5, 0.5), (1.0, 1.0)):
        reduced = g_time_reduced(r, t, degenerate, quad)
        general = g_time(r, t, degenerate, quad)
        _record(
            checks,
            "degenerate",
            degenerate,
            (general - reduced) / reduced,
            DEGENERATE_TOL,
            r=r,
            t=t,
        )
    return checks


def execute(args: argparse.Namespace):
    config = args.run_config
    quad = config.quadrature() if config is not None else QuadratureSpec()
    if args.probes < 0:
        raise ValueError(f"--probes must be nonnegative, got {args.probes}.")
    if args.quick:
        if config is None:
            lattice = [_params(1.0, 1.0, 2.0)]
        else:
            lattice = [config.model_params()]
    else:
        lattice = full_lattice()
    checks = run_checks(
        lattice, quad, full=not args.quick, probes=args.probes, seed=args.seed
    )
    failed = [c for c in checks if not c["passed"]]
    target = output_dir(args) / "identities.json"
    write_json(target, {"passed": not failed, "checks": checks})
    echo(args, f"{len(checks) - len(failed)}/{len(checks)} identity checks passed")
    if failed:
        raise ToleranceError(
            f"{len(failed)} identity checks failed; see '{target}'."
        )
