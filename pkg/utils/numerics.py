"""
Scalar numerical helpers shared by the core modules: monotone inversion by
geometric bracketing and Brent's method, and least-squares line fits.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize, stats

from config import get_kinetic_config
from utils.exceptions import DomainError, SolverError


def grow_bracket(func: Callable[[float], float], target: float, hi: float,
                 growth: Optional[float] = None, max_steps: Optional[int] = None) -> float:
    """Grow hi geometrically until the increasing func reaches target."""
    settings = get_kinetic_config()
    growth = growth or settings.BRACKET_GROWTH
    max_steps = max_steps or settings.MAX_BRACKET_STEPS

    for _ in range(max_steps):
        if func(hi) >= target:
            return hi
        hi *= growth
    raise SolverError("Failed to bracket the inverse of a monotone map",
                      {'target': target, 'last_upper': hi})


def invert_increasing(func: Callable[[float], float], target: float, initial_upper: float) -> float:
    """
    Solve func(t) = target for t >= 0 where func is increasing with func(0) <= target.

    The bracket [0, initial_upper] is grown geometrically, then the root is
    located with Brent's method to the configured absolute tolerance.
    """
    settings = get_kinetic_config()
    hi = grow_bracket(func, target, max(initial_upper, 1e-300))

    try:
        root, info = optimize.brentq(lambda t: func(t) - target, 0.0, hi, xtol=settings.ROOT_ABS_TOL,
                                     maxiter=settings.ROOT_MAX_ITERS, full_output=True, disp=False)
    except ValueError as e:
        raise DomainError(f"Root is not bracketed: {e}", {'target': target, 'upper': hi})
    if not info.converged:
        raise SolverError("Brent's method did not converge",
                          {'target': target, 'upper': hi, 'iterations': info.iterations, 'flag': info.flag})
    return float(root)


@dataclass(frozen=True)
class LineFit:
    """Least-squares line y = intercept + slope * x."""
    slope: float
    intercept: float
    r2: float
    n_points: int


def fit_line(x: np.ndarray, y: np.ndarray) -> LineFit:
    """Least-squares fit with the coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or np.ptp(x) == 0.0:
        raise DomainError("Degenerate window for a line fit", {'points': int(x.size)})

    result = stats.linregress(x, y)
    r2 = float(result.rvalue ** 2) if np.isfinite(result.rvalue) else 1.0
    return LineFit(slope=float(result.slope), intercept=float(result.intercept),
                   r2=min(max(r2, 0.0), 1.0), n_points=int(x.size))
