from __future__ import annotations

import argparse
import json
import logging
import math
from pathlib import Path

from viscowave.config import RunConfig
from viscowave.errors import (
    ConfigError,
    ConvergenceError,
    OracleBandError,
)

LOG_FORMAT = "%(asctime)s %(levelname)s %(message)s"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_CONVERGENCE = 4
EXIT_ORACLE_BAND = 5


def add_global_args(parser: argparse.ArgumentParser) -> argparse._ArgumentGroup:
    """Add global arguments to the parser.

    Args:
        parser (argparse.ArgumentParser): Argument parser

    Returns:
        argparse._ArgumentGroup: The global arguments group
    """
    global_args = parser.add_argument_group("global options")
    global_args.add_argument(
        "--config",
        type=Path,
        default=None,
        help="Path to the run configuration (TOML)",
    )
    global_args.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output directory; defaults to output.directory of the configuration",
    )
    global_args.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed for randomized property probes",
    )
    global_args.add_argument(
        "--verbose",
        action="store_true",
        help="Enable debug logging",
        default=False,
    )
    global_args.add_argument(
        "--silent",
        action="store_true",
        help="Suppress output to stdout",
        default=False,
    )
    return global_args


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(format=LOG_FORMAT)
    logging.getLogger("viscowave").setLevel(
        logging.DEBUG if verbose else logging.WARNING
    )


def exit_code_for(error: Exception) -> int:
    """Map a failure to the process exit status.

    Args:
        error (Exception): Exception raised by a command

    Returns:
        int: 2 for configuration and usage problems, 3 for failed tolerance
            checks, 4 for non-convergence, 5 for oracle band violations
    """
    if isinstance(error, OracleBandError):
        return EXIT_ORACLE_BAND
    if isinstance(error, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(error, ValueError | OSError):
        return EXIT_CONFIG
    return EXIT_TOLERANCE


def require_config(args: argparse.Namespace) -> RunConfig:
    config = getattr(args, "run_config", None)
    if config is None:
        raise ConfigError([f"--config is required for '{args.command}'"])
    return config


def output_dir(args: argparse.Namespace) -> Path:
    config = getattr(args, "run_config", None)
    if args.out is not None:
        path = Path(args.out)
    elif config is not None:
        path = Path(config.output.directory)
    else:
        path = Path("out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def output_formats(args: argparse.Namespace) -> tuple[str, ...]:
    config = getattr(args, "run_config", None)
    return config.output.formats if config is not None else ("csv", "json")


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_finite(v) for v in value]
    return value


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(_finite(payload), f, indent=2)


def echo(args: argparse.Namespace, message: str) -> None:
    if not args.silent:
        print(message)  # noqa: T201
