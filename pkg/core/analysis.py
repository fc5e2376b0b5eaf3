"""
Convergence constants, step-size bounds and rate certificates.

Bundles collect the constants of the growth assumptions for a kinetic/objective
pairing; the helpers turn them into exclusive step-size bounds, contraction
parameters for the Lyapunov function H + beta<x - x_star, p>, and the envelopes
W_i (discrete) and W_t (continuous) that bound suboptimality by 2W.
"""

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from config import get_analysis_config, get_ode_config
from core.integrators import Method, Trajectory, hamiltonian
from core.kinetic import PowerKinetic, c_const, exponents_equal
from core.objective import GrowthCertificate, ObjectiveSpec
from utils.exceptions import ConsistencyError, DomainError, MissingFieldError
from utils.logging import get_logger
from utils.numerics import fit_line

logger = get_logger('analysis')

MethodLike = Union[Method, str]


@dataclass(frozen=True)
class AlphaFunction:
    """alpha(y) = scale * (y + 1)^(-decay); constant when decay is 0."""
    scale: float
    decay: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.scale <= 1.0) or self.decay < 0.0:
            raise DomainError("alpha must take values in (0, 1]", {'scale': self.scale, 'decay': self.decay})

    @property
    def kind(self) -> str:
        return "constant" if self.decay == 0.0 else "decreasing"

    def __call__(self, y: float) -> float:
        return self.value(y)

    def value(self, y: float) -> float:
        if self.decay == 0.0:
            return self.scale
        return self.scale * (y + 1.0) ** (-self.decay)

    def derivative(self, y: float) -> float:
        if self.decay == 0.0:
            return 0.0
        return -self.decay * self.scale * (y + 1.0) ** (-self.decay - 1.0)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'scale': self.scale, 'decay': self.decay}


@dataclass(frozen=True)
class ConstantsBundle:
    """Constants of the growth assumptions for one method; unused fields stay None."""
    alpha_fn: AlphaFunction
    C_alpha_gamma: float
    C_fK: Optional[float] = None
    C_K: Optional[float] = None
    D_fK: Optional[float] = None
    D_K: Optional[float] = None
    E_k: Optional[float] = None
    F_k: Optional[float] = None
    alpha_star: Optional[float] = None
    # Non-convex regime
    D_f: Optional[float] = None
    sigma_power: Optional[float] = None

    @property
    def nonconvex(self) -> bool:
        return self.sigma_power is not None

    def with_initial_energy(self, H0: float) -> 'ConstantsBundle':
        """Fix alpha_star = alpha(3 H0)."""
        return replace(self, alpha_star=self.alpha_fn(3.0 * H0))

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise MissingFieldError(f"Constants bundle lacks {', '.join(missing)}", {'missing': missing})

    def to_dict(self) -> Dict[str, Any]:
        data = {key: value for key, value in self.__dict__.items()
                if key != 'alpha_fn' and value is not None}
        data['alpha_fn'] = self.alpha_fn.to_dict()
        return data


@dataclass(frozen=True)
class RateCertificate:
    method: str
    epsilon_max: float
    epsilon: float
    factor_form: str  # "divide": W/(1 + c), "multiply": W(1 - c)
    per_step_factor: float
    beta_star: float
    lambda_star: float
    alpha_star: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _method(method: MethodLike) -> Method:
    return method if isinstance(method, Method) else Method(method)


# ----------------------------------------------------------------------------
# Contraction parameters
# ----------------------------------------------------------------------------

def lambda_rate(alpha: float, beta: float, gamma: float) -> float:
    """Contraction rate of V for a given beta; the second branch alone when beta = alpha."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if not 0.0 < beta <= min(alpha, gamma):
        raise DomainError(f"beta must lie in (0, min(alpha, gamma)], got {beta}")

    momentum_branch = beta * (1.0 - gamma) / (1.0 - beta)
    if beta == alpha:
        return momentum_branch
    position_branch = (alpha * gamma - alpha * beta - beta * gamma) / (alpha - beta)
    return min(position_branch, momentum_branch)


def beta_lambda_star(alpha: float, gamma: float) -> Tuple[float, float]:
    """
    The beta maximizing lambda_rate and the resulting rate.

    beta_star is the smaller root of (alpha+1)b^2 - (2alpha+gamma)b + alpha*gamma,
    where both branches of lambda_rate meet.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")

    if alpha == 1.0:
        beta_star = gamma / 2.0
    else:
        root = math.sqrt(4.0 * alpha ** 2 * (1.0 - gamma) + gamma ** 2)
        beta_star = 2.0 * alpha * gamma / (2.0 * alpha + gamma + root)
    lambda_star = beta_star * (1.0 - gamma) / (1.0 - beta_star)
    return beta_star, lambda_star


def lyapunov_value(state, f: ObjectiveSpec, K, beta: float,
                   x_star: Optional[np.ndarray] = None, f_star: Optional[float] = None) -> float:
    """V = H + beta <x - x_star, p>."""
    x_star = f.x_star if x_star is None else np.asarray(x_star, dtype=float)
    f_star = f.f_star if f_star is None else f_star
    if x_star is None or f_star is None:
        raise MissingFieldError(f"Objective '{f.name}' has no known minimizer")
    H = K.value(state.p) + f.value(state.x) - f_star
    return H + beta * float((state.x - x_star) @ state.p)


def adaptive_lyapunov(state, f: ObjectiveSpec, K, bundle: ConstantsBundle) -> Tuple[float, float]:
    """
    Solve V = H + (C_alpha_gamma * alpha(2V) / 2) <x - x_star, p> for V in [H/2, 3H/2].

    Returns (V, beta). Damped fixed-point iteration is tried first; Brent's method on
    the bracket finishes the solve if it stalls.
    """
    settings = get_analysis_config()
    H = hamiltonian(K, f, state.x, state.p)
    if H <= 0.0:
        return 0.0, bundle.C_alpha_gamma * bundle.alpha_fn(0.0) / 2.0

    coupling = float((state.x - f.x_star) @ state.p)
    lo, hi = 0.5 * H, 1.5 * H

    def update(V: float) -> float:
        return H + 0.5 * bundle.C_alpha_gamma * bundle.alpha_fn(2.0 * V) * coupling

    V = H
    for _ in range(settings.LYAPUNOV_MAX_ITERS):
        target = min(max(update(V), lo), hi)
        step = settings.LYAPUNOV_DAMPING * (target - V)
        V += step
        if abs(step) <= settings.LYAPUNOV_TOL * H:
            break
    else:
        V = optimize.brentq(lambda v: v - update(v), lo, hi, xtol=settings.LYAPUNOV_TOL * H)

    return V, 0.5 * bundle.C_alpha_gamma * bundle.alpha_fn(2.0 * V)


# ----------------------------------------------------------------------------
# Constants for kinetic/objective pairings
# ----------------------------------------------------------------------------

def alpha_known_power(mu: float, a: float, A: float) -> AlphaFunction:
    """Constant alpha = min(mu^(a-1), mu^(A-1), 1)."""
    if not mu > 0.0 or not (a > 1.0 and A > 1.0):
        raise DomainError("alpha_known_power needs mu > 0 and a, A > 1", {'mu': mu, 'a': a, 'A': A})
    return AlphaFunction(min(mu ** (a - 1.0), mu ** (A - 1.0), 1.0))


def alpha_relativistic(mu: float, A: float) -> AlphaFunction:
    """alpha(y) = min(mu^(A-1), mu, 1) (y + 1)^(1-A)."""
    if not mu > 0.0 or not 1.0 < A <= 2.0:
        raise DomainError("alpha_relativistic needs mu > 0 and A in (1, 2]", {'mu': mu, 'A': A})
    return AlphaFunction(min(mu ** (A - 1.0), mu, 1.0), A - 1.0)


def _check_pairing(cert: GrowthCertificate, K: PowerKinetic):
    if not isinstance(K, PowerKinetic):
        raise ConsistencyError("Certified constants need a power kinetic energy")
    if not (exponents_equal(K.a, cert.a) and exponents_equal(K.A, cert.A)):
        raise ConsistencyError("Kinetic exponents do not match the certificate",
                               {'a': K.a, 'A': K.A, 'expected_a': cert.a, 'expected_A': cert.A})
    if not exponents_equal(K.q, cert.norm_q):
        raise ConsistencyError("Kinetic norm does not match the certificate",
                               {'q': K.q, 'expected_q': cert.norm_q})


def _require_certificate(cert: GrowthCertificate, *names: str):
    missing = [name for name in names if getattr(cert, name) is None]
    if missing:
        raise MissingFieldError(f"Certificate lacks {', '.join(missing)}", {'missing': missing})


def constants_known_power(cert: GrowthCertificate, K: PowerKinetic, gamma: float,
                          method: Optional[MethodLike] = None) -> ConstantsBundle:
    """Constants for f growing like phi_b^B paired with k = phi_a^A(||p||_*), a = b*, A = B*."""
    _check_pairing(cert, K)
    _require_certificate(cert, 'mu', 'L')
    a, A = K.a, K.A
    largest = max(a, A)

    alpha = alpha_known_power(cert.mu, a, A)
    bundle = ConstantsBundle(alpha_fn=alpha, C_alpha_gamma=gamma,
                             C_fK=max(a - 1.0, A - 1.0, cert.L), C_K=largest)
    if method is None:
        return bundle

    method = _method(method)
    if method is Method.EXPLICIT1:
        if not (cert.b >= 2.0 and cert.B >= 2.0):
            raise ConsistencyError("The first explicit method needs b, B >= 2", {'b': cert.b, 'B': cert.B})
        _require_certificate(cert, 'L_f', 'D_f')
        D_fK = cert.L_f / alpha.scale * max(cert.D_f, 2.0 * c_const(a, A) * (largest - 1.0))
        return replace(bundle, D_fK=D_fK)

    if method is Method.EXPLICIT2:
        if not (cert.b <= 2.0 and cert.B <= 2.0):
            raise ConsistencyError("The second explicit method needs b, B <= 2", {'b': cert.b, 'B': cert.B})
        _require_certificate(cert, 'N')
        D_fK = (largest - 1.0 + cert.N) * max(2.0 * cert.L, a - 2.0, A - 2.0) / alpha.scale
        return replace(bundle, D_fK=D_fK, D_K=largest * (largest - 1.0), E_k=largest - 1.0, F_k=1.0)

    return bundle


def constants_relativistic(cert: GrowthCertificate, K: PowerKinetic, gamma: float,
                           method: Optional[MethodLike] = None) -> ConstantsBundle:
    """Constants for the relativistic kinetic sqrt(||p||^2 + 1) - 1 with f of tail power B >= 2."""
    if not (isinstance(K, PowerKinetic) and K.is_relativistic):
        raise ConsistencyError("Relativistic constants need the relativistic kinetic energy")
    if not cert.B >= 2.0:
        raise ConsistencyError("Relativistic constants need a tail power B >= 2", {'B': cert.B})
    if not exponents_equal(K.q, cert.norm_q):
        raise ConsistencyError("Kinetic norm does not match the certificate",
                               {'q': K.q, 'expected_q': cert.norm_q})
    _require_certificate(cert, 'mu', 'L')

    A = cert.A
    alpha = alpha_relativistic(cert.mu, A)
    bundle = ConstantsBundle(alpha_fn=alpha, C_alpha_gamma=gamma, C_fK=max(1.0, cert.L), C_K=2.0)

    if cert.L_f is not None:
        if cert.B > 2.0:
            D_fK = 3.0 * cert.L_f / min(cert.mu ** (A - 1.0), cert.mu, 1.0)
        else:
            D_fK = 6.0 * cert.L_f / min(cert.mu, 1.0)
        bundle = replace(bundle, D_fK=D_fK)
    elif method is not None and _method(method) is Method.EXPLICIT1:
        raise MissingFieldError("The first explicit method needs L_f for the relativistic kinetic")
    return bundle


def constants_nonconvex(cert: GrowthCertificate, K, gamma: float) -> ConstantsBundle:
    """
    Smoothness constants for the first explicit method without convexity, with
    sigma(t) = t^s / s. For k = phi_a^a this gives D_K = a - 1 when s = a/(a-1).
    """
    _require_certificate(cert, 'sigma_power', 'D_f_smooth')
    s = cert.sigma_power
    if not (isinstance(K, PowerKinetic) and exponents_equal(K.a, K.A)
            and exponents_equal(s, K.a / (K.a - 1.0))):
        raise ConsistencyError("The smoothness power must be conjugate to the kinetic power",
                               {'sigma_power': s})
    return ConstantsBundle(alpha_fn=AlphaFunction(1.0), C_alpha_gamma=gamma,
                           D_K=K.a - 1.0, D_f=cert.D_f_smooth, sigma_power=s)


# ----------------------------------------------------------------------------
# Step sizes and envelopes
# ----------------------------------------------------------------------------

def psi_eval(t: float) -> float:
    """t - 3t^(1/3) + 2."""
    if not t >= 0.0:
        raise DomainError(f"psi needs t >= 0, got {t}")
    return t - 3.0 * np.cbrt(t) + 2.0


def psi_conj(t: float) -> float:
    """2(1 - t)^(-1/2) - 2 on [0, 1)."""
    if not 0.0 <= t < 1.0:
        raise DomainError(f"psi* needs t in [0, 1), got {t}")
    return 2.0 / math.sqrt(1.0 - t) - 2.0


def _explicit_drag(bundle: ConstantsBundle) -> float:
    return bundle.C_fK + 6.0 * bundle.D_fK / bundle.C_alpha_gamma


def step_bound(method: MethodLike, bundle: ConstantsBundle, gamma: float) -> float:
    """Upper bound on the step size; exclusive except in the non-convex regime."""
    method = _method(method)
    C = bundle.C_alpha_gamma

    if bundle.nonconvex:
        if method is not Method.EXPLICIT1:
            raise DomainError("Only the first explicit method has a non-convex step bound")
        bundle.require('D_f', 'D_K')
        return (gamma / (bundle.D_f * bundle.D_K)) ** (1.0 / (bundle.sigma_power - 1.0))

    if method is Method.IMPLICIT:
        bundle.require('C_fK')
        return (1.0 - gamma) / (2.0 * max(bundle.C_fK, 1.0))
    if method is Method.EXPLICIT1:
        bundle.require('C_fK', 'C_K', 'D_fK')
        return min((1.0 - gamma) / (2.0 * max(_explicit_drag(bundle), 1.0)),
                   C / (10.0 * bundle.C_fK + 5.0 * gamma * bundle.C_K))
    if method is Method.EXPLICIT2:
        bundle.require('C_fK', 'C_K', 'D_fK', 'D_K', 'E_k', 'F_k')
        return min((1.0 - gamma) / (2.0 * _explicit_drag(bundle)),
                   (1.0 - gamma) / (8.0 * bundle.D_K * (1.0 + bundle.E_k)),
                   C / (6.0 * (5.0 * bundle.C_fK + 2.0 * gamma * bundle.C_K) + 12.0 * gamma * C),
                   math.sqrt(1.0 / (6.0 * gamma ** 2 * bundle.D_K * bundle.F_k)))
    raise DomainError(f"No certified step bound for {method.value}")


def _contraction(method: Method, bundle: ConstantsBundle, gamma: float, epsilon: float) -> Tuple[str, float]:
    """Factor form and the bracket multiplying alpha(2W) in the W recursion."""
    C = bundle.C_alpha_gamma
    if method is Method.IMPLICIT:
        return "divide", epsilon * C * (1.0 - gamma - 2.0 * bundle.C_fK * epsilon) / 4.0
    drag = _explicit_drag(bundle)
    coefficient = epsilon * C / 4.0 * (1.0 - gamma - 2.0 * epsilon * drag)
    return ("divide" if method is Method.EXPLICIT1 else "multiply"), coefficient


def w_recursion(method: MethodLike, W0: float, bundle: ConstantsBundle, gamma: float,
                epsilon: float, n_steps: int) -> np.ndarray:
    """Envelope W_0..W_n with f(x_i) - f_star <= 2 W_i; alpha is evaluated at 2W_i."""
    method = _method(method)
    bound = step_bound(method, bundle, gamma)
    if not 0.0 < epsilon < bound:
        raise DomainError(f"Step size {epsilon} is outside (0, {bound})",
                          {'method': method.value, 'epsilon_max': bound})

    form, coefficient = _contraction(method, bundle, gamma, epsilon)
    W = np.empty(n_steps + 1)
    W[0] = W0
    for i in range(n_steps):
        decay = coefficient * bundle.alpha_fn(2.0 * W[i])
        W[i + 1] = W[i] / (1.0 + decay) if form == "divide" else W[i] * (1.0 - decay)
    return W


def continuous_envelope(W0: float, alpha_fn: AlphaFunction, C_alpha_gamma: float, gamma: float,
                        t_grid: Sequence[float]) -> np.ndarray:
    """Integrate W' = -lambda alpha(2W) W with lambda = (1 - gamma) C_alpha_gamma / 4."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        return t_grid.copy()
    rate = (1.0 - gamma) * C_alpha_gamma / 4.0
    if W0 == 0.0 or t_grid[-1] == t_grid[0]:
        return np.full(t_grid.shape, float(W0))

    tol = get_ode_config().ENVELOPE_REL_TOL
    solution = integrate.solve_ivp(lambda t, W: -rate * alpha_fn(2.0 * W[0]) * W,
                                   (t_grid[0], t_grid[-1]), [W0], method='RK45',
                                   t_eval=t_grid, rtol=tol, atol=tol * abs(W0) * 1e-6)
    if not solution.success:
        raise DomainError(f"Envelope integration failed: {solution.message}")
    return solution.y[0]


def envelope_bound(W: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Suboptimality guaranteed by an envelope value."""
    return 2.0 * W


def rate_certificate(method: MethodLike, bundle: ConstantsBundle, gamma: float,
                     H0: Optional[float] = None, epsilon: Optional[float] = None) -> RateCertificate:
    """Bound, contraction parameters and the per-step factor at alpha_star = alpha(3 H0)."""
    method = _method(method)
    if H0 is not None:
        bundle = bundle.with_initial_energy(H0)
    if bundle.alpha_star is None:
        if bundle.alpha_fn.kind != "constant":
            raise MissingFieldError("A decreasing alpha needs the initial energy H0")
        bundle = bundle.with_initial_energy(0.0)

    epsilon_max = step_bound(method, bundle, gamma)
    if epsilon is None:
        epsilon = get_analysis_config().AUTO_STEP_FRACTION * epsilon_max
    beta_star, lambda_star = beta_lambda_star(bundle.alpha_star, gamma)

    if bundle.nonconvex:
        form, factor = "descent", 1.0
    else:
        form, coefficient = _contraction(method, bundle, gamma, epsilon)
        decay = coefficient * bundle.alpha_star
        factor = 1.0 / (1.0 + decay) if form == "divide" else 1.0 - decay

    logger.debug(f"{method.value}: epsilon_max={epsilon_max:.6g}, factor={factor:.10f}")
    return RateCertificate(method=method.value, epsilon_max=epsilon_max, epsilon=epsilon,
                           factor_form=form, per_step_factor=factor, beta_star=beta_star,
                           lambda_star=lambda_star, alpha_star=bundle.alpha_star)


# ----------------------------------------------------------------------------
# Observed rates
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservedRate:
    """-slope of log H per iteration over the last half of a run."""
    rate: float
    r2: float
    n_points: int
    accepted: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def observed_rate(trajectory: Trajectory, column: str = "H") -> Optional[ObservedRate]:
    """Linear fit of log(column) against the iteration; None with fewer than three positive samples."""
    iterations = trajectory.column("iteration")
    values = trajectory.column(column)
    tail = iterations >= 0.5 * iterations[-1]
    mask = tail & np.isfinite(values) & (values > 0.0)
    if np.count_nonzero(mask) < 3:
        return None
    try:
        fit = fit_line(iterations[mask], np.log(values[mask]))
    except DomainError:
        return None
    return ObservedRate(rate=-fit.slope, r2=fit.r2, n_points=fit.n_points,
                        accepted=fit.r2 >= get_analysis_config().RATE_R2_MIN)
