import argparse
import importlib
import logging
import sys
from collections.abc import Callable
from pathlib import Path

from viscowave.config import configured_args, read_config
from viscowave.utils import EXIT_OK, add_global_args, configure_logging, exit_code_for

logger = logging.getLogger(__name__)

Executor = Callable[[argparse.Namespace], int | None]


def load_command_module(command_name: str):
    module_path = f"viscowave.commands.{command_name}"
    module = importlib.import_module(module_path)
    if not hasattr(module, "register"):  # pragma: no cover - we trust importlib
        raise ImportError(
            f"The module {command_name} does not have a register function."
        )
    if not hasattr(module, "execute"):  # pragma: no cover - we trust importlib
        raise ImportError(
            f"The module {command_name} does not have an execute function."
        )
    return module


def create_parser_from_files(
    path: Path,
) -> tuple[
    argparse.ArgumentParser,
    dict[str, tuple[Executor, argparse.ArgumentParser]],
]:
    parser = argparse.ArgumentParser(
        prog="viscowave",
        description=(
            "Green's-function solver for the damped wave equation with "
            "viscous regularization."
        ),
        usage="viscowave <command> [options]",
    )
    sub_parser = parser.add_subparsers(dest="command")
    add_global_args(parser)
    cli_commands = {}
    for f in sorted(path.glob("*.py")):
        if f.is_file() and f.stem != "__init__":
            module = load_command_module(f.stem)
            module_parser: argparse.ArgumentParser = module.register(sub_parser)
            module_executor: Executor = module.execute
            add_global_args(module_parser)
            name = module_parser.prog.split()[-1]
            cli_commands[name] = (module_executor, module_parser)
    parser._positionals.title = "commands"
    return parser, cli_commands


def main(sys_args: list[str] | None = None) -> int:
    commands_path = Path(__file__).parent / "commands"
    parser, cli_commands = create_parser_from_files(commands_path)
    # sys.argv[0] is the script name, so we skip it
    sys_args = sys.argv[1:] if sys_args is None else sys_args
    try:
        args = parser.parse_args(sys_args)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(args.verbose)
    if args.command not in cli_commands:
        parser.print_help()
        return EXIT_OK
    command_executor, command_parser = cli_commands[args.command]
    try:
        run_config = read_config(args.config) if args.config else None
        position = sys_args.index(args.command)
        command_args = (
            configured_args(run_config, args.command)
            + sys_args[:position]
            + sys_args[position + 1 :]
        )
        known_args, _ = command_parser.parse_known_args(command_args)
        known_args.command = args.command
        known_args.run_config = run_config
        logger.debug("executing %s with %s", args.command, command_args)
        return command_executor(known_args) or EXIT_OK
    except SystemExit as e:
        return int(e.code or 0)
    except (ValueError, RuntimeError, ArithmeticError, OSError) as e:
        code = exit_code_for(e)
        logger.error("%s failed: %s", args.command, e)
        return code


__all__ = ["main"]
