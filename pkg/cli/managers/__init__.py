"""
Managers for the command line: experiment building and artifact collection.
"""

from .experiment_builder import ExperimentBuilder, ResolvedMethod
from .run_collector import RunCollector

__all__ = [
    'ExperimentBuilder',
    'ResolvedMethod',
    'RunCollector'
]
