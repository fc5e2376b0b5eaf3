"""
Base command class for the command line.

Every subcommand derives from BaseCommand, which supplies argument
registration, experiment loading and the task fan-out shared by all commands.
"""

import argparse
import logging
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict

from config.experiment import ExperimentConfig
from utils.async_task import TaskManager, TaskStatus
from utils.exceptions import MissingFieldError, SolverError
from utils.logging import get_logger

from cli.managers import RunCollector


class BaseCommand(ABC):
    """
    Abstract base class for all subcommands.

    A command parses nothing itself: MainApplication hands it the parsed
    arguments and a RunCollector, and writes the collected artifacts afterwards.
    """

    help_text = ""

    def __init__(self, name: str, task_manager: TaskManager):
        """
        Initialize the base command.

        Args:
            name: Subcommand name, also used for logging
            task_manager: Shared pool the command fans its runs out on
        """
        self.name = name
        self.task_manager = task_manager
        self.logger = get_logger(f"cli.{name.lower()}")

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Register command-specific arguments. Commands read --config by default."""
        parser.add_argument("--config", metavar="PATH", help="experiment document (JSON)")

    @abstractmethod
    def execute(self, args: argparse.Namespace, collector: RunCollector) -> Dict[str, Any]:
        """
        Run the command.

        Returns:
            A JSON-serializable summary, printed to standard output
        """
        pass

    def load_experiment(self, args: argparse.Namespace) -> ExperimentConfig:
        if not getattr(args, 'config', None):
            raise MissingFieldError(f"'{self.name}' needs --config PATH")
        experiment = ExperimentConfig.from_file(args.config)
        if getattr(args, 'seed', None) is not None:
            experiment.seed = args.seed
        self.logger.debug(f"Loaded experiment from {args.config}")
        return experiment

    def run_tasks(self, jobs: Dict[str, Callable]) -> Dict[str, Any]:
        """
        Run independent jobs on the task manager and return their results by key.

        Each job accepts the ``report_progress`` and ``is_canceled`` keywords. The
        first failure is re-raised once every job has finished.
        """
        task_ids = {}
        for key, job in jobs.items():
            task_id = f"{self.name}:{key}"
            self.task_manager.create_task(task_id, job)
            self.task_manager.start_task(task_id)
            task_ids[key] = task_id

        finished = self.task_manager.wait_all(list(task_ids.values()))
        for task_id in task_ids.values():
            self.task_manager.remove_task(task_id)

        for task in finished:
            if task.status == TaskStatus.FAILED:
                raise task.error
            if task.status != TaskStatus.COMPLETED:
                raise SolverError(f"Task {task.task_id} ended as {task.status.value}")
        return {key: task.result for key, task in zip(task_ids, finished)}

    def handle_error(self, error: Exception, context: str = "") -> None:
        """
        Log an error raised while the command ran.

        Args:
            error: The exception that occurred
            context: Additional context about where the error occurred
        """
        error_msg = f"{self.name} failed"
        if context:
            error_msg += f" ({context})"
        error_msg += f": {error}"

        self.logger.error(error_msg, exc_info=self.logger.isEnabledFor(logging.DEBUG))
