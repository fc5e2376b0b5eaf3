"""
Configuration package for the Hamiltonian descent toolkit.
"""

from .settings import (
    AppConfig,
    config,
    get_kinetic_config,
    get_objective_config,
    get_integrator_config,
    get_ode_config,
    get_lower_bound_config,
    get_analysis_config,
    get_output_config,
    get_logging_config,
    get_threading_config,
)

__all__ = [
    'AppConfig',
    'config',
    'get_kinetic_config',
    'get_objective_config',
    'get_integrator_config',
    'get_ode_config',
    'get_lower_bound_config',
    'get_analysis_config',
    'get_output_config',
    'get_logging_config',
    'get_threading_config',
]
