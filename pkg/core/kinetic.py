"""
Power kinetic energies k(p) = phi_a^A(||p||_q) and the scalar calculus behind them.

phi_a^A(t) = (1/A) (t^a + 1)^(A/a) - 1/A behaves like t^a/a near zero and like
t^A/A at infinity. Conjugate exponents b = a/(a-1), B = A/(A-1) describe the
conjugate profile.
"""

import math
from dataclasses import dataclass, field
from typing import List, Protocol, Sequence, Tuple

import numpy as np

from config import get_kinetic_config
from utils.exceptions import DomainError, RangeError
from utils.numerics import invert_increasing


def conjugate_exponent(a: float) -> float:
    """Hoelder conjugate a/(a-1); infinite for a = 1."""
    if a == 1.0:
        return math.inf
    return a / (a - 1.0)


def exponents_equal(a: float, A: float) -> bool:
    return abs(a - A) < get_kinetic_config().EXPONENT_EQUALITY_TOL


def _check_exponents(a: float, A: float):
    if not (a >= 1.0 and A >= 1.0):
        raise DomainError(f"Exponents must satisfy a, A >= 1, got a={a}, A={A}",
                          {'a': a, 'A': A})


def _check_argument(t: float, name: str = 't'):
    if not t >= 0.0:
        raise DomainError(f"{name} must be non-negative, got {t}", {name: t})


def _log1p_pow(t: float, a: float) -> float:
    """log(1 + t^a) without overflow for large t."""
    power = t ** a
    if math.isinf(power):
        return a * math.log(t)
    return math.log1p(power)


# ----------------------------------------------------------------------------
# Scalar profile
# ----------------------------------------------------------------------------

def phi_eval(a: float, A: float, t: float) -> float:
    """phi_a^A(t), evaluated through expm1/log1p so small t keeps full relative accuracy."""
    _check_exponents(a, A)
    _check_argument(t)
    if t == 0.0:
        return 0.0
    return math.expm1((A / a) * _log1p_pow(t, a)) / A


def phi_grad(a: float, A: float, t: float) -> float:
    """phi'(t) = (t^a + 1)^((A-a)/a) t^(a-1)."""
    _check_exponents(a, A)
    _check_argument(t)
    if t == 0.0:
        return 1.0 if a == 1.0 else 0.0
    return math.exp(((A - a) / a) * _log1p_pow(t, a) + (a - 1.0) * math.log(t))


def phi_second(a: float, A: float, t: float) -> float:
    """phi''(t); at t = 0 the one-sided limit (infinite when a < 2)."""
    _check_exponents(a, A)
    _check_argument(t)
    if t == 0.0:
        if a == 1.0:
            return A - 1.0
        if a == 2.0:
            return 1.0
        return 0.0 if a > 2.0 else math.inf

    log_u = _log1p_pow(t, a)
    log_t = math.log(t)
    curvature = 0.0
    if A != a:
        curvature += (A - a) * math.exp(((A - a) / a - 1.0) * log_u + (2.0 * a - 2.0) * log_t)
    if a != 1.0:
        curvature += (a - 1.0) * math.exp(((A - a) / a) * log_u + (a - 2.0) * log_t)
    return curvature


def phi_grad_inverse(a: float, A: float, s: float) -> float:
    """
    The unique t >= 0 with phi'(t) = s.

    Closed forms cover a = A and the relativistic profile (a, A) = (2, 1); other
    pairs are inverted numerically on a geometrically grown bracket.
    """
    _check_exponents(a, A)
    _check_argument(s, 's')
    if a == 1.0:
        raise DomainError("phi' is not invertible at the origin when a = 1", {'a': a, 'A': A})
    if A == 1.0 and s >= 1.0:
        raise RangeError(f"s={s} is outside the range [0, 1) of phi' when A = 1", {'s': s})
    if s == 0.0:
        return 0.0

    if exponents_equal(a, A):
        return s ** (1.0 / (a - 1.0))
    if a == 2.0 and A == 1.0:
        return s / math.sqrt((1.0 - s) * (1.0 + s))

    b = conjugate_exponent(a)
    return invert_increasing(lambda t: phi_grad(a, A, t), s, max(1.0, 2.0 * s ** (b - 1.0)))


def phi_conj(a: float, A: float, t: float) -> float:
    """Convex conjugate (phi_a^A)*(t); +inf outside the effective domain."""
    _check_exponents(a, A)
    _check_argument(t)

    if a == 1.0 and A == 1.0:
        return 0.0 if t <= 1.0 else math.inf
    if exponents_equal(a, A):
        b = conjugate_exponent(a)
        return phi_eval(b, b, t)
    if a == 1.0:
        if t <= 1.0:
            return 0.0
        B = conjugate_exponent(A)
        return t ** B / B - t + 1.0 / A
    if A == 1.0:
        if t > 1.0:
            return math.inf
        b = conjugate_exponent(a)
        return -math.expm1(math.log1p(-(t ** b)) / b) if t < 1.0 else 1.0

    if t == 0.0:
        return 0.0
    s_star = phi_grad_inverse(a, A, t)
    return t * s_star - phi_eval(a, A, s_star)


def rho_eval(a: float, A: float, t: float) -> float:
    """
    Relative error of the near-conjugate: phi_b^B'(phi'(t)) = rho(t) * t.

    Bounded between 1 and c_const(a, A).
    """
    if not (a > 1.0 and A > 1.0) or exponents_equal(a, A):
        raise DomainError("rho is defined for a, A > 1 with a != A", {'a': a, 'A': A})
    if not t > 0.0:
        raise DomainError(f"rho requires t > 0, got {t}", {'t': t})

    power = t ** a
    inner = power / (power + 1.0) + math.exp(-((A - 1.0) / (a - 1.0)) * _log1p_pow(t, a))
    return inner ** ((a - A) / (a * (A - 1.0)))


def c_const(a: float, A: float) -> float:
    """Maximum of rho over t > 0; the continuous limit 1 is returned when a and A coincide."""
    if not (a > 1.0 and A > 1.0):
        raise DomainError("C_{a,A} requires a, A > 1", {'a': a, 'A': A})
    if exponents_equal(a, A):
        return 1.0

    ratio = (a - 1.0) / (A - 1.0)
    inner = 1.0 - ratio ** ((a - 1.0) / (A - a)) + ratio ** ((A - 1.0) / (A - a))
    return inner ** ((a - A) / (a * (A - 1.0)))


@dataclass(frozen=True)
class ConjugateDiagnostics:
    """Observed values of rho on a grid together with the bound C_{a,A}."""
    rho_max: float
    rho_samples: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def observed_max(self) -> float:
        return max((rho for _, rho in self.rho_samples), default=1.0)

    def within_bounds(self, slack: float = 1e-12) -> bool:
        return all(1.0 - slack <= rho <= self.rho_max + slack for _, rho in self.rho_samples)


def conjugate_diagnostics(a: float, A: float, ts: Sequence[float]) -> ConjugateDiagnostics:
    samples = [(float(t), rho_eval(a, A, float(t))) for t in ts]
    return ConjugateDiagnostics(rho_max=c_const(a, A), rho_samples=samples)


# ----------------------------------------------------------------------------
# l_q norms
# ----------------------------------------------------------------------------

def lq_norm(p: np.ndarray, q: float) -> float:
    """l_q norm, scaled by max |p_i| so large q does not overflow."""
    p = np.asarray(p, dtype=float)
    if q == 2.0:
        return float(np.linalg.norm(p))
    scale = float(np.max(np.abs(p))) if p.size else 0.0
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((np.abs(p) / scale) ** q) ** (1.0 / q))


def lq_norm_grad(p: np.ndarray, q: float) -> np.ndarray:
    """sign(p) |p|^(q-1) / ||p||_q^(q-1); zero at p = 0."""
    p = np.asarray(p, dtype=float)
    norm = lq_norm(p, q)
    if norm == 0.0:
        return np.zeros_like(p)
    return np.sign(p) * (np.abs(p) / norm) ** (q - 1.0)


def lq_norm_hvp(p: np.ndarray, w: np.ndarray, q: float) -> np.ndarray:
    """Hessian of ||.||_q at p != 0 applied to w."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    norm = lq_norm(p, q)
    if norm == 0.0:
        raise DomainError("The norm Hessian is undefined at the origin")
    g = np.sign(p) * (np.abs(p) / norm) ** (q - 1.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        diagonal = (np.abs(p) / norm) ** (q - 2.0)
        result = (q - 1.0) / norm * (diagonal * w - g * float(g @ w))
    if not np.all(np.isfinite(result)):
        raise DomainError("The norm Hessian is unbounded at a point with zero coordinates", {'q': q})
    return result


@dataclass(frozen=True)
class NormDescriptor:
    """
    Dual norm ||.||_* = l_q used by the kinetic energy; positions are measured in
    the primal norm l_q' with 1/q + 1/q' = 1.
    """
    q: float = 2.0

    def __post_init__(self):
        if not (1.0 < self.q < math.inf):
            raise DomainError(f"Norm exponent must lie in (1, inf), got {self.q}", {'q': self.q})

    @property
    def primal_q(self) -> float:
        return self.q / (self.q - 1.0)

    @property
    def hessian_constant(self) -> float:
        """N = q - 1, defined for q >= 2."""
        if self.q < 2.0:
            raise DomainError("N is defined only for q >= 2", {'q': self.q})
        return self.q - 1.0

    def dual(self, p: np.ndarray) -> float:
        return lq_norm(p, self.q)

    def primal(self, x: np.ndarray) -> float:
        return lq_norm(x, self.primal_q)


def norm_hess_maxeigen_bound(norm: NormDescriptor, p: np.ndarray) -> float:
    """Certified bound (q-1)/||p||_q on the largest eigenvalue of the norm Hessian."""
    N = norm.hessian_constant
    magnitude = norm.dual(p)
    if magnitude == 0.0:
        raise DomainError("The norm Hessian bound requires p != 0")
    return N / magnitude


# ----------------------------------------------------------------------------
# Kinetic energies
# ----------------------------------------------------------------------------

class Kinetic(Protocol):
    """Operations every kinetic energy offers to the integrators."""

    def value(self, p: np.ndarray) -> float: ...

    def grad(self, p: np.ndarray) -> np.ndarray: ...

    def hvp(self, p: np.ndarray, w: np.ndarray) -> np.ndarray: ...

    def conj(self, v: np.ndarray) -> float: ...

    def conj_grad(self, v: np.ndarray) -> np.ndarray: ...

    def conj_hvp(self, v: np.ndarray, w: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class PowerKinetic:
    """k(p) = phi_a^A(||p||_q)."""
    a: float
    A: float
    norm: NormDescriptor = field(default_factory=NormDescriptor)

    def __post_init__(self):
        _check_exponents(self.a, self.A)
        if not (self.a > 1.0 or self.A > 1.0):
            raise DomainError("A kinetic energy needs a > 1 or A > 1 for strict convexity",
                              {'a': self.a, 'A': self.A})

    @classmethod
    def classical(cls, q: float = 2.0) -> 'PowerKinetic':
        """||p||^2 / 2."""
        return cls(2.0, 2.0, NormDescriptor(q))

    @classmethod
    def relativistic(cls, q: float = 2.0) -> 'PowerKinetic':
        """sqrt(||p||^2 + 1) - 1."""
        return cls(2.0, 1.0, NormDescriptor(q))

    @classmethod
    def matched(cls, b: float, B: float, q: float = 2.0) -> 'PowerKinetic':
        """Kinetic whose conjugate exponents equal the objective's powers (b, B)."""
        return cls(conjugate_exponent(b), 1.0 if math.isinf(B) else conjugate_exponent(B), NormDescriptor(q))

    @property
    def b(self) -> float:
        return conjugate_exponent(self.a)

    @property
    def B(self) -> float:
        return conjugate_exponent(self.A)

    @property
    def q(self) -> float:
        return self.norm.q

    @property
    def is_relativistic(self) -> bool:
        return self.a == 2.0 and self.A == 1.0

    def to_dict(self) -> dict:
        return {'a': self.a, 'A': self.A, 'q': self.q}

    def value(self, p: np.ndarray) -> float:
        return phi_eval(self.a, self.A, self.norm.dual(p))

    def grad(self, p: np.ndarray) -> np.ndarray:
        if self.a == 1.0:
            raise DomainError("k is not differentiable at the origin when a = 1")
        p = np.asarray(p, dtype=float)
        if self.is_relativistic and self.q == 2.0:
            return p / math.sqrt(float(p @ p) + 1.0)
        magnitude = self.norm.dual(p)
        if magnitude == 0.0:
            return np.zeros_like(p)
        return phi_grad(self.a, self.A, magnitude) * lq_norm_grad(p, self.q)

    def hvp(self, p: np.ndarray, w: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        w = np.asarray(w, dtype=float)
        magnitude = self.norm.dual(p)
        if magnitude == 0.0:
            if self.a == 2.0 and self.q == 2.0:
                return w.copy()
            if self.a > 2.0:
                return np.zeros_like(w)
            raise DomainError("The kinetic Hessian is unbounded at the origin", self.to_dict())
        g = lq_norm_grad(p, self.q)
        return (phi_second(self.a, self.A, magnitude) * float(g @ w) * g
                + phi_grad(self.a, self.A, magnitude) * lq_norm_hvp(p, w, self.q))

    def conj(self, v: np.ndarray) -> float:
        return phi_conj(self.a, self.A, self.norm.primal(v))

    def conj_grad(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        magnitude = self.norm.primal(v)
        if magnitude == 0.0:
            return np.zeros_like(v)
        return phi_grad_inverse(self.a, self.A, magnitude) * lq_norm_grad(v, self.norm.primal_q)

    def conj_hvp(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        magnitude = self.norm.primal(v)
        if magnitude == 0.0:
            if self.a == 2.0:
                return w.copy()
            if self.a < 2.0:
                return np.zeros_like(w)
            raise DomainError("The conjugate Hessian is unbounded at the origin", self.to_dict())

        t = phi_grad_inverse(self.a, self.A, magnitude)
        second = phi_second(self.a, self.A, t)
        radial = 0.0 if math.isinf(second) else 1.0 / second
        g = lq_norm_grad(v, self.norm.primal_q)
        return radial * float(g @ w) * g + t * lq_norm_hvp(v, w, self.norm.primal_q)


@dataclass(frozen=True, eq=False)
class QuadraticKinetic:
    """k(p) = <p, M^-1 p> / 2 for a symmetric positive definite M."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError("Quadratic kinetic needs a square matrix", {'shape': matrix.shape})
        if not np.allclose(matrix, matrix.T, rtol=1e-12, atol=1e-12):
            raise DomainError("Quadratic kinetic needs a symmetric matrix")
        if np.min(np.linalg.eigvalsh(matrix)) <= 0.0:
            raise DomainError("Quadratic kinetic needs a positive definite matrix")
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'inverse', np.linalg.inv(matrix))

    def to_dict(self) -> dict:
        return {'quadratic': self.matrix.tolist()}

    def value(self, p: np.ndarray) -> float:
        return 0.5 * float(p @ self.inverse @ p)

    def grad(self, p: np.ndarray) -> np.ndarray:
        return self.inverse @ np.asarray(p, dtype=float)

    def hvp(self, p: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.inverse @ np.asarray(w, dtype=float)

    def conj(self, v: np.ndarray) -> float:
        return 0.5 * float(v @ self.matrix @ v)

    def conj_grad(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def conj_hvp(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(w, dtype=float)


def kinetic_eval(K: Kinetic, p: np.ndarray) -> float:
    return K.value(np.asarray(p, dtype=float))


def kinetic_grad(K: Kinetic, p: np.ndarray) -> np.ndarray:
    return K.grad(np.asarray(p, dtype=float))


def kinetic_conj_grad(K: Kinetic, v: np.ndarray) -> np.ndarray:
    return K.conj_grad(np.asarray(v, dtype=float))
