"""
Objective functions with known minimizers, growth certificates and the builtin catalogue.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

import numpy as np
from scipy import optimize

from config import get_objective_config
from core.kinetic import (NormDescriptor, PowerKinetic, c_const, conjugate_exponent,
                          lq_norm, lq_norm_grad, lq_norm_hvp, phi_eval)
from utils.exceptions import ConfigurationError, DomainError, MissingFieldError
from utils.logging import get_logger

logger = get_logger('objective')


@dataclass(frozen=True)
class GrowthCertificate:
    """
    Constants witnessing the growth assumptions on f for a kinetic pairing.

    Positions are measured in the primal norm l_{q'} of ``norm_q``. With the
    matched pairing the upper inequality uses phi_a^A, a = b/(b-1), A = B/(B-1);
    with the relativistic pairing it uses phi_2^1.
    """
    b: float
    B: float
    mu: Optional[float] = None
    L: Optional[float] = None
    L_f: Optional[float] = None
    D_f: Optional[float] = None
    N: Optional[float] = None
    sigma_power: Optional[float] = None
    D_f_smooth: Optional[float] = None
    norm_q: float = 2.0
    pairing: str = "matched"

    def __post_init__(self):
        if not (self.b > 1.0 and self.B > 1.0):
            raise DomainError("Certificate powers must exceed 1", {'b': self.b, 'B': self.B})
        if self.pairing not in ("matched", "relativistic"):
            raise DomainError(f"Unknown certificate pairing '{self.pairing}'")
        for name in ('mu', 'L', 'L_f', 'D_f', 'D_f_smooth'):
            value = getattr(self, name)
            if value is not None and not value > 0.0:
                raise DomainError(f"Certificate constant {name} must be positive, got {value}")

    @property
    def a(self) -> float:
        return conjugate_exponent(self.b)

    @property
    def A(self) -> float:
        return conjugate_exponent(self.B)

    @property
    def norm(self) -> NormDescriptor:
        return NormDescriptor(self.norm_q)

    def to_dict(self) -> Dict[str, Any]:
        return {key: value for key, value in self.__dict__.items() if value is not None}


@dataclass(frozen=True)
class GrowthReport:
    """Largest relative violation of each certificate inequality over the samples."""
    lower_violation: float
    upper_violation: float
    samples: int
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """f with its gradient, optional Hessian-vector product and minimizer metadata."""
    name: str
    dim: int
    func: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hvp: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    certificate: Optional[GrowthCertificate] = None
    convex: bool = True
    smoothness: Optional[float] = None
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def has_hvp(self) -> bool:
        return self.hvp is not None

    def value(self, x: np.ndarray) -> float:
        return float(self.func(np.asarray(x, dtype=float)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.grad(np.asarray(x, dtype=float)), dtype=float)

    def hessian_vector(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.hvp is None:
            raise MissingFieldError(f"Objective '{self.name}' has no Hessian-vector product")
        return np.asarray(self.hvp(np.asarray(x, dtype=float), np.asarray(v, dtype=float)), dtype=float)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Dense Hessian assembled column by column from the Hessian-vector product."""
        identity = np.eye(self.dim)
        columns = [self.hessian_vector(x, identity[i]) for i in range(self.dim)]
        matrix = np.column_stack(columns)
        return 0.5 * (matrix + matrix.T)

    def local_smoothness(self, x0: np.ndarray) -> float:
        """Largest Hessian eigenvalue at x0 (the L0 used for fixed baseline steps)."""
        return float(np.max(np.linalg.eigvalsh(self.hessian(x0))))

    def suboptimality(self, x: np.ndarray) -> float:
        if self.f_star is None:
            raise MissingFieldError(f"Objective '{self.name}' has no known optimal value")
        return self.value(x) - self.f_star


def suboptimality(spec: ObjectiveSpec, x: np.ndarray) -> float:
    """f(x) - f(x_star)."""
    return spec.suboptimality(x)


# ----------------------------------------------------------------------------
# Catalogue
# ----------------------------------------------------------------------------

def _quartic2d(params: Mapping[str, Any]) -> ObjectiveSpec:
    def func(x):
        u, w = x[0] + x[1], 0.5 * (x[0] - x[1])
        return u ** 4 + w ** 4

    def grad(x):
        u, w = x[0] + x[1], 0.5 * (x[0] - x[1])
        return np.array([4.0 * u ** 3 + 2.0 * w ** 3, 4.0 * u ** 3 - 2.0 * w ** 3])

    def hvp(x, v):
        u, w = x[0] + x[1], 0.5 * (x[0] - x[1])
        along, across = v[0] + v[1], v[0] - v[1]
        return 12.0 * u ** 2 * along * np.ones(2) + 3.0 * w ** 2 * across * np.array([1.0, -1.0])

    certificate = GrowthCertificate(b=4.0, B=4.0, mu=0.5, L=8.0, L_f=24.0, D_f=1.0)
    return ObjectiveSpec("quartic2d", 2, func, grad, hvp, np.zeros(2), 0.0, certificate)


def _power1d(params: Mapping[str, Any]) -> ObjectiveSpec:
    b = float(params.get('b', 4.0))
    if not b > 1.0:
        raise DomainError(f"power1d needs b > 1, got {b}", {'b': b})

    def func(x):
        return abs(x[0]) ** b / b

    def grad(x):
        return np.sign(x) * np.abs(x) ** (b - 1.0)

    def hvp(x, v):
        if x[0] == 0.0 and b < 2.0:
            raise DomainError("power1d Hessian is unbounded at the origin", {'b': b})
        if x[0] == 0.0:
            return v * (1.0 if b == 2.0 else 0.0)
        return (b - 1.0) * abs(x[0]) ** (b - 2.0) * v

    if b >= 2.0:
        L_f, D_f = (1.0, 1.0) if b == 2.0 else (b - 1.0, b - 2.0)
    else:
        L_f = D_f = None
    certificate = GrowthCertificate(b=b, B=b, mu=1.0, L=b - 1.0, L_f=L_f, D_f=D_f, N=1.0)
    smoothness = 1.0 if b == 2.0 else None
    return ObjectiveSpec("power1d", 1, func, grad, hvp, np.zeros(1), 0.0, certificate,
                         smoothness=smoothness, params={'b': b})


def _phi_power(params: Mapping[str, Any]) -> ObjectiveSpec:
    b = float(params.get('b', 2.0))
    B = float(params.get('B', 8.0))
    dim = int(params.get('d', 1))
    pairing = params.get('pairing', 'matched')
    profile = PowerKinetic(b, B)

    if pairing == 'relativistic':
        if (b, B) != (2.0, 8.0):
            raise ConfigurationError("A relativistic certificate is available only for phiPower(2, 8)",
                                     {'b': b, 'B': B})
        certificate = GrowthCertificate(b=b, B=B, mu=1.0, L=4.0, L_f=7.0, pairing='relativistic')
    else:
        L = (b - 1.0) if b == B else c_const(b, B) * (max(b, B) - 1.0)
        if b == B and b >= 2.0:
            L_f, D_f = (1.0, 1.0) if b == 2.0 else (b - 1.0, b - 2.0)
        else:
            L_f = D_f = None
        certificate = GrowthCertificate(b=b, B=B, mu=1.0, L=L, L_f=L_f, D_f=D_f, N=1.0)

    return ObjectiveSpec("phiPower", dim, profile.value, profile.grad, profile.hvp,
                         np.zeros(dim), 0.0, certificate,
                         params={'b': b, 'B': B, 'd': dim, 'pairing': pairing})


def _norm_four(params: Mapping[str, Any]) -> ObjectiveSpec:
    dim = int(params.get('d', 2))

    def func(x):
        return 0.5 * lq_norm(x, 4.0) ** 2

    def grad(x):
        return lq_norm(x, 4.0) * lq_norm_grad(x, 4.0)

    def hvp(x, v):
        g = lq_norm_grad(x, 4.0)
        return float(g @ v) * g + lq_norm(x, 4.0) * lq_norm_hvp(x, v, 4.0)

    certificate = GrowthCertificate(b=2.0, B=2.0, mu=1.0, L=1.0, N=3.0, norm_q=4.0 / 3.0)
    return ObjectiveSpec("normFour", dim, func, grad, hvp, np.zeros(dim), 0.0, certificate,
                         smoothness=3.0, params={'d': dim})


def _quadratic(params: Mapping[str, Any]) -> ObjectiveSpec:
    if 'matrix' in params:
        matrix = np.array(params['matrix'], dtype=float)
    else:
        matrix = np.diag(np.asarray(params.get('diag', [1.0, 4.0]), dtype=float))
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError("quadratic needs a square matrix", {'shape': matrix.shape})
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    if eigenvalues[0] <= 0.0:
        raise DomainError("quadratic needs a positive definite matrix", {'lambda_min': eigenvalues[0]})

    lam_min, lam_max = float(eigenvalues[0]), float(eigenvalues[-1])
    certificate = GrowthCertificate(b=2.0, B=2.0, mu=lam_min, L=lam_max, L_f=lam_max, D_f=1.0, N=1.0)
    dim = matrix.shape[0]
    return ObjectiveSpec("quadratic", dim,
                         lambda x: 0.5 * float(x @ matrix @ x),
                         lambda x: matrix @ x,
                         lambda x, v: matrix @ v,
                         np.zeros(dim), 0.0, certificate, smoothness=lam_max,
                         params={'matrix': matrix.tolist()})


def _nonconvex1d(params: Mapping[str, Any]) -> ObjectiveSpec:
    # f' = x/2 + cos x has a single root, which lies in [-2, 0]
    root = optimize.brentq(lambda x: 0.5 * x + math.cos(x), -2.0, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    shift = 0.25 * root ** 2 + math.sin(root)

    def func(x):
        return 0.25 * x[0] ** 2 + math.sin(x[0]) - shift

    def grad(x):
        return np.array([0.5 * x[0] + math.cos(x[0])])

    def hvp(x, v):
        return (0.5 - math.sin(x[0])) * v

    certificate = GrowthCertificate(b=2.0, B=2.0, sigma_power=2.0, D_f_smooth=1.5)
    return ObjectiveSpec("nonconvex1d", 1, func, grad, hvp, np.array([root]), 0.0, certificate,
                         convex=False, smoothness=1.5)


_BUILTINS: Dict[str, Callable[[Mapping[str, Any]], ObjectiveSpec]] = {
    'quartic2d': _quartic2d,
    'power1d': _power1d,
    'phiPower': _phi_power,
    'normFour': _norm_four,
    'quadratic': _quadratic,
    'nonconvex1d': _nonconvex1d,
}


def builtin_names() -> Sequence[str]:
    return tuple(_BUILTINS)


def builtin(name: str, params: Optional[Mapping[str, Any]] = None) -> ObjectiveSpec:
    """Build a catalogue objective by name; {'certified': False} drops its certificate."""
    factory = _BUILTINS.get(name)
    if factory is None:
        raise ConfigurationError(f"Unknown objective '{name}'",
                                 {'available': ", ".join(_BUILTINS)})
    params = params or {}
    spec = factory(params)
    if not params.get('certified', True):
        spec = replace(spec, certificate=None)
    logger.debug(f"Built objective {name} (d={spec.dim})")
    return spec


# ----------------------------------------------------------------------------
# Certificates and conjugates
# ----------------------------------------------------------------------------

def _random_directions(rng: np.random.Generator, count: int, dim: int, primal_q: float) -> np.ndarray:
    directions = rng.standard_normal((count, dim))
    norms = np.array([lq_norm(row, primal_q) for row in directions])
    return directions / norms[:, None]


def _relative_violation(lhs: float, rhs: float) -> float:
    return (lhs - rhs) / max(abs(rhs), np.finfo(float).tiny)


def certify_growth(spec: ObjectiveSpec, sample_count: Optional[int] = None,
                   radius_grid: Optional[Sequence[float]] = None,
                   seed: Optional[int] = None) -> GrowthReport:
    """
    Check both certificate inequalities at random points x_star + r*u, ||u|| = 1.

    The lower inequality is mu*phi_b^B(||x - x_star||) <= f(x) - f_star; the upper one
    bounds the kinetic profile of ||grad f(x)||_* by L*(f(x) - f_star).
    """
    cert = spec.certificate
    if cert is None or spec.x_star is None or spec.f_star is None:
        raise MissingFieldError(f"Objective '{spec.name}' has no certificate to verify")

    settings = get_objective_config()
    sample_count = sample_count or settings.CERTIFY_SAMPLES
    radii = tuple(radius_grid) if radius_grid is not None else settings.CERTIFY_RADII
    rng = np.random.default_rng(settings.CERTIFY_SEED if seed is None else seed)

    norm = cert.norm
    upper_profile = (2.0, 1.0) if cert.pairing == 'relativistic' else (cert.a, cert.A)
    lower_worst = upper_worst = -math.inf
    samples = 0

    for radius in radii:
        for direction in _random_directions(rng, sample_count, spec.dim, norm.primal_q):
            x = spec.x_star + radius * direction
            gap = spec.value(x) - spec.f_star
            if cert.mu is not None:
                bound = cert.mu * phi_eval(cert.b, cert.B, norm.primal(x - spec.x_star))
                lower_worst = max(lower_worst, _relative_violation(bound, gap))
            if cert.L is not None:
                kinetic = phi_eval(*upper_profile, norm.dual(spec.gradient(x)))
                upper_worst = max(upper_worst, _relative_violation(kinetic, cert.L * gap))
            samples += 1

    passed = max(lower_worst, upper_worst) <= settings.CERTIFY_REL_TOL
    logger.debug(f"Certificate for {spec.name}: lower {lower_worst:.3e}, upper {upper_worst:.3e}")
    return GrowthReport(lower_violation=max(lower_worst, 0.0), upper_violation=max(upper_worst, 0.0),
                        samples=samples, passed=passed)


def centered_conjugate(spec: ObjectiveSpec, p: np.ndarray) -> float:
    """
    f_c^*(p) along the direction of p, where f_c(x) = f(x + x_star) - f_star.

    A log grid locates the best radius and a bounded scalar search refines it. Exact
    for radially symmetric objectives; a lower bound otherwise.
    """
    if spec.x_star is None or spec.f_star is None:
        raise MissingFieldError(f"Objective '{spec.name}' has no known minimizer")

    p = np.asarray(p, dtype=float)
    magnitude = float(np.linalg.norm(p))
    if magnitude == 0.0:
        return 0.0

    settings = get_objective_config()
    direction = p / magnitude

    def gain(s: float) -> float:
        return s * magnitude - (spec.value(spec.x_star + s * direction) - spec.f_star)

    grid = np.concatenate(([0.0], np.logspace(-8, math.log10(settings.CONJUGATE_MAX_RADIUS),
                                                settings.CONJUGATE_GRID_SIZE)))
    values = np.array([gain(s) for s in grid])
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    if hi <= lo:
        return float(values[best])

    result = optimize.minimize_scalar(lambda s: -gain(s), bounds=(lo, hi), method='bounded',
                                      options={'xatol': 1e-12 * max(1.0, hi)})
    return float(max(values[best], -result.fun))
