"""
Main Application for the command line.

Parses the subcommand, applies global flags, dispatches to the command class
and maps failures to exit codes: 0 on success, 2 for configuration, validation
and file errors, 3 for solver failures.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

from config import AppConfig, config, get_logging_config, get_output_config
from utils.async_task import TaskManager
from utils.exceptions import ConfigurationError, FileError, SolverError, ValidationError
from utils.file_io import to_json
from utils.logging import enable_file_logging, get_logger, log_config_change, log_performance, set_log_level

from cli.commands import (
    BaseCommand, CompareCommand, LowerCommand, OdeCommand, RatesCommand, RunCommand,
)
from cli.managers import RunCollector

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class MainApplication:
    """
    Command-line application for Hamiltonian descent experiments.

    Commands share one task manager; each invocation gets its own RunCollector,
    which writes artifacts only after the command has finished all its runs.
    """

    def __init__(self, task_manager: TaskManager):
        """
        Initialize the application with all subcommands.

        Args:
            task_manager: Manager for concurrent runs
        """
        self.logger = get_logger("main_application")
        self.task_manager = task_manager
        self.commands: Dict[str, BaseCommand] = {}
        self._initialize_commands()
        self.parser = self._build_parser()

    def _initialize_commands(self) -> None:
        for command in (RunCommand(self.task_manager), RatesCommand(self.task_manager),
                        OdeCommand(self.task_manager), LowerCommand(self.task_manager),
                        CompareCommand(self.task_manager)):
            self.commands[command.name] = command
        self.logger.debug(f"Commands registered: {', '.join(self.commands)}")

    def _build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--out", metavar="DIR", help="output directory")
        common.add_argument("--seed", type=int, help="override the experiment seed")
        common.add_argument("--quiet", action="store_true", help="only log warnings and errors")
        common.add_argument("--log-dir", metavar="DIR", help="also write log files to DIR")
        common.add_argument("--settings", metavar="PATH", help="JSON overrides of the tunable settings")

        parser = argparse.ArgumentParser(
            prog="hamdesc",
            description="Hamiltonian descent benchmarks: discrete runs, certified rates, ODE simulation.")
        subparsers = parser.add_subparsers(dest="command", metavar="{" + ",".join(self.commands) + "}")
        subparsers.required = True
        for name, command in self.commands.items():
            subparser = subparsers.add_parser(name, parents=[common], help=command.help_text)
            command.add_arguments(subparser)
        return parser

    def _apply_global_flags(self, args: argparse.Namespace) -> None:
        if args.settings:
            before = config.to_dict()
            config.update_from(AppConfig.load_from_file(args.settings))
            for section, values in config.to_dict().items():
                for key, value in values.items():
                    if before[section][key] != value:
                        log_config_change(f"{section}.{key}", before[section][key], value)
        if args.quiet:
            set_log_level("WARNING")
        log_dir = args.log_dir or (get_logging_config().LOG_DIR if get_logging_config().FILE_LOGGING else None)
        if log_dir:
            enable_file_logging(log_dir)

    @log_performance
    def dispatch(self, args: argparse.Namespace) -> dict:
        command = self.commands[args.command]
        collector = RunCollector(Path(args.out or get_output_config().DEFAULT_OUT_DIR))
        summary = command.execute(args, collector)
        collector.write()
        return summary

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Parse argv, run the command, print its JSON summary; returns the exit code."""
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

        command = self.commands[args.command]
        try:
            self._apply_global_flags(args)
            summary = self.dispatch(args)
        except (ConfigurationError, ValidationError, FileError) as e:
            command.handle_error(e, "configuration")
            return EXIT_CONFIG
        except SolverError as e:
            command.handle_error(e, "solver")
            return EXIT_SOLVER
        except Exception as e:
            self.logger.exception(f"{args.command} failed unexpectedly: {e}")
            return EXIT_SOLVER

        sys.stdout.write(to_json(summary) + "\n")
        return EXIT_OK
