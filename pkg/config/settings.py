"""
Configuration settings for the Hamiltonian descent toolkit.
This module centralizes all numerical tolerances and tunable parameters.
"""

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Tuple


@dataclass
class KineticSettings:
    """Scalar profile and kinetic-map numerics."""
    # Root finding for the inverse of phi'
    ROOT_ABS_TOL: float = 1e-12
    BRACKET_GROWTH: float = 2.0
    MAX_BRACKET_STEPS: int = 2000
    ROOT_MAX_ITERS: int = 200

    # Exponents closer than this are treated as equal (C_{a,A} -> 1)
    EXPONENT_EQUALITY_TOL: float = 1e-12


@dataclass
class ObjectiveSettings:
    """Objective catalogue and certificate sampling."""
    CERTIFY_SAMPLES: int = 64
    CERTIFY_RADII: Tuple[float, ...] = (1e-3, 1e-2, 1e-1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0)
    CERTIFY_REL_TOL: float = 1e-9
    CERTIFY_SEED: int = 0

    # Numeric centered conjugate (sup along the direction of p)
    CONJUGATE_GRID_SIZE: int = 400
    CONJUGATE_MAX_RADIUS: float = 1e3


@dataclass
class IntegratorSettings:
    """Discrete integrator configuration."""
    SUBSOLVER_TOL: float = 1e-10
    SUBSOLVER_MAX_ITERS: int = 200
    ARMIJO_CONSTANT: float = 1e-4
    MAX_HALVINGS: int = 40

    # Allowed H increase before a step is flagged
    MONOTONE_SLACK: float = 1e-12

    DEFAULT_MAX_ITERS: int = 1000
    PROGRESS_INTERVAL: int = 1000  # iterations between progress callbacks

    # Doubling search for the largest stable gradient descent step
    STEP_SEARCH_START: float = 1e-8
    STEP_SEARCH_TRIAL_ITERS: int = 200
    STEP_SEARCH_MAX_DOUBLINGS: int = 80


@dataclass
class OdeSettings:
    """Continuous-time simulation configuration."""
    METHOD: str = "RK45"  # Dormand-Prince 5(4)
    REL_TOL: float = 1e-9
    ABS_TOL: float = 1e-12
    ENERGY_SLACK: float = 1e-8  # relative to 1 + H(t0)
    ENVELOPE_REL_TOL: float = 1e-10


@dataclass
class LowerBoundSettings:
    """Lower-bound system, trapping regions and shooting."""
    TRAPPING_FACTORS: Tuple[float, ...] = (1.5, 2.0, 4.0)  # A = factor / gamma
    CLASSIFICATION_HORIZON: float = 1e4
    ORIGIN_CUTOFF: float = 1e-12
    CLASSIFY_REL_TOL: float = 1e-11
    CLASSIFY_ABS_TOL: float = 1e-30  # p is O(x^(b-1)) on the slow manifold
    CLASSIFY_RETRIES: int = 1
    ETA_TOL: float = 1e-6
    ETA_RATE_TOL: float = 1e-8  # tighter bracket used before fitting the fast path
    ETA_UPPER_START: float = 1.0
    MAX_DOUBLINGS: int = 60
    MAX_BISECTIONS: int = 200

    GENERIC_START: float = 1.0
    GENERIC_WINDOW: Tuple[float, float] = (1e2, 1e4)
    GENERIC_SAMPLES: int = 400

    # Fast-path window: from |x| <= START * eta down to COLLAPSE * bracket width
    FAST_WINDOW_START: float = 1e-2
    FAST_WINDOW_COLLAPSE: float = 1e3
    FAST_SAMPLES: int = 2000

    SWEEP_OFFSETS: Tuple[float, ...] = (-0.5, -0.1, -0.01, 0.0, 0.01, 0.1, 0.5)
    SWEEP_T_END: float = 50.0


@dataclass
class AnalysisSettings:
    """Constants, step bounds and certificates."""
    AUTO_STEP_FRACTION: float = 0.9
    LYAPUNOV_TOL: float = 1e-10
    LYAPUNOV_MAX_ITERS: int = 500
    LYAPUNOV_DAMPING: float = 0.5
    RATE_R2_MIN: float = 0.95


@dataclass
class OutputSettings:
    """Artifact writing configuration."""
    FLOAT_FORMAT: str = ".17g"
    DEFAULT_OUT_DIR: str = "out"
    SUMMARY_FILE: str = "summary.json"
    RATES_FILE: str = "rates.json"
    COMPARE_FILE: str = "compare.csv"
    LOWER_FILE: str = "lower.json"


@dataclass
class LoggingSettings:
    """Logging configuration."""
    FILE_LOGGING: bool = False
    LOG_DIR: str = "logs"
    CONSOLE_LEVEL: str = "INFO"


@dataclass
class ThreadingSettings:
    """Threading and async operation configuration."""
    DEFAULT_MAX_WORKERS: int = 4
    THREAD_NAME_PREFIX: str = "HamDesc"


_SECTIONS = {
    'kinetic': KineticSettings,
    'objective': ObjectiveSettings,
    'integrator': IntegratorSettings,
    'ode': OdeSettings,
    'lower_bound': LowerBoundSettings,
    'analysis': AnalysisSettings,
    'output': OutputSettings,
    'logging': LoggingSettings,
    'threading': ThreadingSettings,
}


class AppConfig:
    """Main application configuration container."""

    def __init__(self):
        self.kinetic = KineticSettings()
        self.objective = ObjectiveSettings()
        self.integrator = IntegratorSettings()
        self.ode = OdeSettings()
        self.lower_bound = LowerBoundSettings()
        self.analysis = AnalysisSettings()
        self.output = OutputSettings()
        self.logging = LoggingSettings()
        self.threading = ThreadingSettings()

    def apply_overrides(self, overrides: dict) -> None:
        """Apply a {section: {FIELD: value}} mapping in place."""
        # Imported here: utils.exceptions logs through utils.logging, which reads no config.
        from utils.exceptions import ConfigurationError

        for section_name, values in overrides.items():
            if section_name not in _SECTIONS:
                raise ConfigurationError(f"Unknown settings section '{section_name}'",
                                         {'known': sorted(_SECTIONS)})
            if not isinstance(values, dict):
                raise ConfigurationError(f"Settings section '{section_name}' must be an object")
            section = getattr(self, section_name)
            known = {f.name: f for f in fields(section)}
            for key, value in values.items():
                if key not in known:
                    raise ConfigurationError(f"Unknown setting {section_name}.{key}")
                current = getattr(section, key)
                if isinstance(current, tuple):
                    value = tuple(value)
                setattr(section, key, value)

    @classmethod
    def load_from_file(cls, config_path: str) -> 'AppConfig':
        """Load configuration overrides from a JSON file."""
        from utils.exceptions import ConfigurationError

        try:
            with open(config_path, 'r', encoding='utf-8') as handle:
                overrides = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read settings file: {e}", {'path': str(config_path)})

        instance = cls()
        instance.apply_overrides(overrides)
        return instance

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def save_to_file(self, config_path: str) -> None:
        """Save the current configuration as JSON."""
        path = Path(config_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)

    def update_from(self, other: 'AppConfig') -> None:
        """Copy every section of another configuration into this instance."""
        for name in _SECTIONS:
            setattr(self, name, getattr(other, name))


# Global configuration instance
config = AppConfig()


def get_kinetic_config() -> KineticSettings:
    """Get kinetic configuration."""
    return config.kinetic


def get_objective_config() -> ObjectiveSettings:
    """Get objective configuration."""
    return config.objective


def get_integrator_config() -> IntegratorSettings:
    """Get integrator configuration."""
    return config.integrator


def get_ode_config() -> OdeSettings:
    """Get ODE configuration."""
    return config.ode


def get_lower_bound_config() -> LowerBoundSettings:
    """Get lower-bound configuration."""
    return config.lower_bound


def get_analysis_config() -> AnalysisSettings:
    """Get analysis configuration."""
    return config.analysis


def get_output_config() -> OutputSettings:
    """Get output configuration."""
    return config.output


def get_logging_config() -> LoggingSettings:
    """Get logging configuration."""
    return config.logging


def get_threading_config() -> ThreadingSettings:
    """Get threading configuration."""
    return config.threading
