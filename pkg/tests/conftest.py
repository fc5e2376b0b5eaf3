"""
Pytest configuration and fixtures for the Hamiltonian descent tests.
"""

import json
import logging

import numpy as np
import pytest

from config import AppConfig, config
from core.kinetic import PowerKinetic
from core.objective import builtin
from utils.async_task import TaskManager


@pytest.fixture(autouse=True)
def default_settings():
    """Every test starts from, and leaves behind, the default settings."""
    config.update_from(AppConfig())
    yield config
    config.update_from(AppConfig())


@pytest.fixture
def task_manager():
    """Task manager with a small pool, shut down after the test."""
    manager = TaskManager(max_workers=2)
    yield manager
    manager.shutdown()


@pytest.fixture
def write_experiment(tmp_path):
    """Write an experiment document and return its path."""
    def write(document: dict, name: str = "experiment.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path
    return write


@pytest.fixture
def run_cli(task_manager, tmp_path):
    """Run the command line in-process; returns (exit code, output directory)."""
    from cli import MainApplication

    def invoke(*argv, out=None):
        out_dir = tmp_path / (out or "out")
        code = MainApplication(task_manager).run([*argv, "--out", str(out_dir)])
        return code, out_dir
    return invoke


@pytest.fixture
def power4():
    """f(x) = x^4 / 4 with its certificate."""
    return builtin("power1d", {"b": 4})


@pytest.fixture
def power4_kinetic():
    """k(p) = 3|p|^(4/3) / 4, conjugate to x^4 / 4."""
    return PowerKinetic.matched(4.0, 4.0)


@pytest.fixture
def quartic():
    return builtin("quartic2d")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# Configure logging for tests
logging.getLogger("hamdesc").setLevel(logging.WARNING)  # Reduce noise in tests
