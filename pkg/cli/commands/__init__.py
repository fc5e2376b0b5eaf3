"""
Subcommands of the command line, one class per subcommand.
"""

from .base_command import BaseCommand
from .run_command import RunCommand
from .rates_command import RatesCommand
from .ode_command import OdeCommand
from .lower_command import LowerCommand
from .compare_command import CompareCommand

__all__ = [
    'BaseCommand',
    'RunCommand',
    'RatesCommand',
    'OdeCommand',
    'LowerCommand',
    'CompareCommand'
]
