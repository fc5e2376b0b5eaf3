"""
Command-line surface: argparse application, subcommands and result managers.
"""

from .main_application import MainApplication

__all__ = ['MainApplication']
