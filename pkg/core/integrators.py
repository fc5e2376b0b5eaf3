"""
Discretizations of the conformal Hamiltonian system x' = grad k(p), p' = -grad f(x) - gamma p
and the classical momentum / gradient descent baselines.
"""

import functools
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional

import numpy as np

from config import get_integrator_config
from core.kinetic import PowerKinetic
from core.objective import ObjectiveSpec
from utils.exceptions import ConfigurationError, DomainError, RangeError, SubsolverError
from utils.logging import get_logger, log_run_summary

logger = get_logger('integrators')


class Method(str, Enum):
    IMPLICIT = "implicit"
    EXPLICIT1 = "explicit1"
    EXPLICIT2 = "explicit2"
    CLASSICAL_MOMENTUM = "classical_momentum"
    GRADIENT_DESCENT = "gradient_descent"

    @property
    def is_hamiltonian(self) -> bool:
        return self in (Method.IMPLICIT, Method.EXPLICIT1, Method.EXPLICIT2)


@dataclass
class IntegratorConfig:
    method: Method
    epsilon: float
    gamma: float = 0.5
    max_iters: Optional[int] = None
    subsolver_tol: Optional[float] = None
    subsolver_max_iters: Optional[int] = None

    def __post_init__(self):
        settings = get_integrator_config()
        try:
            self.method = Method(self.method)
        except ValueError:
            raise ConfigurationError(f"Unknown method '{self.method}'",
                                     {'available': ", ".join(m.value for m in Method)})
        if not self.epsilon > 0.0:
            raise DomainError(f"Step size must be positive, got {self.epsilon}")
        if self.method is not Method.GRADIENT_DESCENT and not 0.0 < self.gamma < 1.0:
            raise DomainError(f"Friction must lie in (0, 1), got {self.gamma}")

        self.max_iters = settings.DEFAULT_MAX_ITERS if self.max_iters is None else self.max_iters
        self.subsolver_tol = self.subsolver_tol or settings.SUBSOLVER_TOL
        self.subsolver_max_iters = self.subsolver_max_iters or settings.SUBSOLVER_MAX_ITERS

    @property
    def delta(self) -> float:
        return 1.0 / (1.0 + self.gamma * self.epsilon)


@dataclass(frozen=True)
class State:
    """Phase-space point (x, p)."""
    x: np.ndarray
    p: np.ndarray

    @classmethod
    def at_rest(cls, x0) -> 'State':
        x0 = np.array(x0, dtype=float)
        return cls(x0, np.zeros_like(x0))

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p)))


def hamiltonian(K, f: ObjectiveSpec, x: np.ndarray, p: np.ndarray) -> float:
    """H = k(p) + f(x) - f_star; kinetic part dropped when K is None."""
    kinetic = 0.0 if K is None else K.value(p)
    return kinetic + f.suboptimality(x)


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    x: np.ndarray
    p: np.ndarray
    H: float
    subopt: float
    grad_norm: float
    V: Optional[float] = None


@dataclass(frozen=True)
class StopCriteria:
    subopt_tol: Optional[float] = None
    grad_tol: Optional[float] = None
    max_iters: Optional[int] = None


@dataclass
class Trajectory:
    method: Method
    epsilon: float
    records: List[TrajectoryRecord] = field(default_factory=list)
    violations: List[int] = field(default_factory=list)
    stop_reason: str = "max_iters"
    elapsed: float = 0.0

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    @property
    def h_monotone(self) -> bool:
        return not self.violations

    @property
    def converged(self) -> bool:
        return self.stop_reason in ("subopt_tol", "grad_tol")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records], dtype=float)


# ----------------------------------------------------------------------------
# Steps
# ----------------------------------------------------------------------------

def step_explicit1(state: State, cfg: IntegratorConfig, K, f: ObjectiveSpec) -> State:
    """p+ = delta (p - eps grad f(x)), x+ = x + eps grad k(p+)."""
    p_next = cfg.delta * (state.p - cfg.epsilon * f.gradient(state.x))
    x_next = state.x + cfg.epsilon * K.grad(p_next)
    return State(x_next, p_next)


@functools.lru_cache(maxsize=None)
def _warn_momentum_flip(epsilon: float, gamma: float):
    logger.warning(f"epsilon*gamma = {epsilon * gamma:.3g} >= 1 flips the momentum sign every step")


def step_explicit2(state: State, cfg: IntegratorConfig, K, f: ObjectiveSpec) -> State:
    """x+ = x + eps grad k(p), p+ = (1 - eps gamma) p - eps grad f(x+)."""
    if cfg.epsilon * cfg.gamma >= 1.0:
        _warn_momentum_flip(cfg.epsilon, cfg.gamma)
    x_next = state.x + cfg.epsilon * K.grad(state.p)
    p_next = (1.0 - cfg.epsilon * cfg.gamma) * state.p - cfg.epsilon * f.gradient(x_next)
    return State(x_next, p_next)


def step_classical_momentum(state: State, cfg: IntegratorConfig, f: ObjectiveSpec) -> State:
    """First explicit step with k(p) = ||p||^2 / 2."""
    p_next = cfg.delta * (state.p - cfg.epsilon * f.gradient(state.x))
    return State(state.x + cfg.epsilon * p_next, p_next)


def step_gradient_descent(state: State, cfg: IntegratorConfig, f: ObjectiveSpec) -> State:
    """x+ = x - eps grad f(x); momentum stays zero."""
    return State(state.x - cfg.epsilon * f.gradient(state.x), np.zeros_like(state.p))


class _ImplicitSubproblem:
    """
    x+ = argmin eps k*((x - x_i)/eps) + eps delta f(x) - delta <p_i, x>.

    Its gradient is grad k*(v) + eps delta grad f(x) - delta p_i with v = (x - x_i)/eps,
    and its solution satisfies x = x_i + eps grad k(delta p_i - eps delta grad f(x)).
    """

    def __init__(self, state: State, cfg: IntegratorConfig, K, f: ObjectiveSpec):
        self.x_i = state.x
        self.p_i = state.p
        self.eps = cfg.epsilon
        self.delta = cfg.delta
        self.K = K
        self.f = f

    def momentum(self, x: np.ndarray) -> np.ndarray:
        return self.delta * (self.p_i - self.eps * self.f.gradient(x))

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(x - self.x_i - self.eps * self.K.grad(self.momentum(x))), initial=0.0))

    def objective(self, x: np.ndarray) -> float:
        v = (x - self.x_i) / self.eps
        return (self.eps * self.K.conj(v) + self.eps * self.delta * self.f.value(x)
                - self.delta * float(self.p_i @ x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        v = (x - self.x_i) / self.eps
        return self.K.conj_grad(v) - self.momentum(x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        v = (x - self.x_i) / self.eps
        identity = np.eye(x.size)
        columns = [self.K.conj_hvp(v, e) / self.eps + self.eps * self.delta * self.f.hessian_vector(x, e)
                   for e in identity]
        return np.column_stack(columns)


def _solve_newton(problem: _ImplicitSubproblem, x: np.ndarray, cfg: IntegratorConfig) -> Optional[np.ndarray]:
    """Damped Newton with Armijo backtracking; None when the Hessian information runs out."""
    settings = get_integrator_config()
    for _ in range(cfg.subsolver_max_iters):
        if problem.residual(x) <= cfg.subsolver_tol:
            return x
        try:
            g = problem.gradient(x)
            J = problem.jacobian(x)
        except DomainError:
            return None
        try:
            direction = -np.linalg.solve(J, g)
        except np.linalg.LinAlgError:
            direction = -np.linalg.lstsq(J, g, rcond=None)[0]
        if not np.all(np.isfinite(direction)):
            return None

        value = problem.objective(x)
        slope = float(g @ direction)
        slack = 1e-14 * max(1.0, abs(value))
        step = 1.0
        for _ in range(settings.MAX_HALVINGS):
            trial = x + step * direction
            try:
                trial_value = problem.objective(trial)
            except RangeError:
                trial_value = math.inf
            if trial_value <= value + settings.ARMIJO_CONSTANT * step * slope + slack:
                break
            step *= 0.5
        else:
            return None
        x = trial
    return x if problem.residual(x) <= cfg.subsolver_tol else None


def _solve_fixed_point(problem: _ImplicitSubproblem, x: np.ndarray, cfg: IntegratorConfig) -> np.ndarray:
    """
    Damped iteration of x <- x_i + eps grad k(p+(x)).

    The update direction descends the subproblem objective, so a damped step is
    accepted when it lowers the objective and the damping is halved otherwise.
    Once objective changes are below rounding, the residual decides instead.
    """
    damping = 1.0
    residual = problem.residual(x)
    value = problem.objective(x)
    for _ in range(cfg.subsolver_max_iters * 10):
        if residual <= cfg.subsolver_tol:
            return x
        target = problem.x_i + problem.eps * problem.K.grad(problem.momentum(x))
        trial = x + damping * (target - x)
        try:
            trial_value = problem.objective(trial)
        except RangeError:
            trial_value = math.inf
        trial_residual = problem.residual(trial) if math.isfinite(trial_value) else math.inf
        if abs(trial_value - value) <= 1e-14 * max(1.0, abs(value)):
            accepted = trial_residual < residual
        else:
            accepted = trial_value < value
        if accepted:
            x, value, residual = trial, trial_value, trial_residual
            damping = min(1.0, 2.0 * damping)
        else:
            damping *= 0.5
            if damping < 1e-12:
                break
    raise SubsolverError("Implicit step did not reach the stationarity tolerance",
                         {'residual': residual, 'tolerance': cfg.subsolver_tol})


def step_implicit(state: State, cfg: IntegratorConfig, K, f: ObjectiveSpec) -> State:
    """
    x+ solves the convex subproblem, p+ = delta p - eps delta grad f(x+).

    Newton is used when f has a Hessian-vector product; otherwise, or when the
    conjugate kinetic Hessian is undefined, a damped fixed-point iteration.
    """
    problem = _ImplicitSubproblem(state, cfg, K, f)
    guess = state.x + cfg.epsilon * K.grad(problem.momentum(state.x))

    x_next = None
    if f.has_hvp:
        x_next = _solve_newton(problem, guess, cfg)
    if x_next is None:
        x_next = _solve_fixed_point(problem, guess, cfg)
    return State(x_next, problem.momentum(x_next))


def step(state: State, cfg: IntegratorConfig, K, f: ObjectiveSpec) -> State:
    if cfg.method is Method.IMPLICIT:
        return step_implicit(state, cfg, K, f)
    if cfg.method is Method.EXPLICIT1:
        return step_explicit1(state, cfg, K, f)
    if cfg.method is Method.EXPLICIT2:
        return step_explicit2(state, cfg, K, f)
    if cfg.method is Method.CLASSICAL_MOMENTUM:
        return step_classical_momentum(state, cfg, f)
    return step_gradient_descent(state, cfg, f)


# ----------------------------------------------------------------------------
# Runs
# ----------------------------------------------------------------------------

def _record(iteration: int, state: State, K, f: ObjectiveSpec, beta: Optional[float]) -> TrajectoryRecord:
    subopt = f.suboptimality(state.x)
    H = subopt + (0.0 if K is None else K.value(state.p))
    V = None
    if beta is not None and f.x_star is not None:
        V = H + beta * float((state.x - f.x_star) @ state.p)
    grad_norm = float(np.linalg.norm(f.gradient(state.x)))
    return TrajectoryRecord(iteration, state.x.copy(), state.p.copy(), H, subopt, grad_norm, V)


def run(cfg: IntegratorConfig, K, f: ObjectiveSpec, x0, p0=None,
        stop: Optional[StopCriteria] = None, beta: Optional[float] = None, stride: int = 1,
        progress: Optional[Callable[[float, str], None]] = None,
        should_stop: Optional[Callable[[], bool]] = None) -> Trajectory:
    """
    Iterate the configured method from (x0, p0), recording every stride-th iteration
    and the last one. Steps that raise H by more than the monotonicity slack are flagged.
    """
    settings = get_integrator_config()
    x0 = np.array(x0, dtype=float)
    p0 = np.zeros_like(x0) if p0 is None else np.array(p0, dtype=float)
    if x0.shape != (f.dim,) or p0.shape != x0.shape:
        raise DomainError("Initial state does not match the objective dimension",
                          {'dim': f.dim, 'x0': x0.shape, 'p0': p0.shape})
    if cfg.method is Method.CLASSICAL_MOMENTUM:
        K = PowerKinetic.classical()
    elif cfg.method is Method.GRADIENT_DESCENT:
        K = None
    elif K is None:
        raise ConfigurationError(f"{cfg.method.value} needs a kinetic energy")

    stop = stop or StopCriteria()
    max_iters = cfg.max_iters if stop.max_iters is None else stop.max_iters

    trajectory = Trajectory(cfg.method, cfg.epsilon)
    started = time.perf_counter()
    state = State(x0, p0)
    record = _record(0, state, K, f, beta)
    trajectory.records.append(record)
    last_H = record.H

    for i in range(1, max_iters + 1):
        reason = _reached(record, stop)
        if reason:
            trajectory.stop_reason = reason
            break
        if should_stop is not None and should_stop():
            trajectory.stop_reason = "canceled"
            break

        try:
            state = step(state, cfg, K, f)
            candidate = _record(i, state, K, f, beta) if state.is_finite else None
        except (OverflowError, FloatingPointError):
            candidate = None
        if candidate is None or not math.isfinite(candidate.H):
            trajectory.stop_reason = "diverged"
            logger.warning(f"{cfg.method.value} diverged at iteration {i} (epsilon={cfg.epsilon:.6g})")
            break

        record = candidate
        if record.H > last_H + settings.MONOTONE_SLACK:
            trajectory.violations.append(i)
        last_H = record.H

        if i % stride == 0 or i == max_iters:
            trajectory.records.append(record)
        if progress is not None and i % settings.PROGRESS_INTERVAL == 0:
            progress(i / max_iters, f"{cfg.method.value}: iteration {i}")
    else:
        trajectory.stop_reason = _reached(record, stop) or "max_iters"

    if trajectory.records[-1].iteration != record.iteration:
        trajectory.records.append(record)
    trajectory.elapsed = time.perf_counter() - started
    log_run_summary(cfg.method.value, record.iteration, record.subopt, trajectory.elapsed)
    return trajectory


def largest_stable_step(f: ObjectiveSpec, x0, trial_iters: Optional[int] = None,
                        start: Optional[float] = None) -> float:
    """
    Largest gradient descent step, found by doubling, whose trial run stays finite
    and decreases f monotonically from x0.
    """
    settings = get_integrator_config()
    trial_iters = settings.STEP_SEARCH_TRIAL_ITERS if trial_iters is None else trial_iters
    epsilon = settings.STEP_SEARCH_START if start is None else start

    def stable(eps: float) -> bool:
        trial = run(IntegratorConfig(Method.GRADIENT_DESCENT, eps, max_iters=trial_iters), None, f, x0)
        return trial.stop_reason != "diverged" and trial.h_monotone

    if not stable(epsilon):
        raise DomainError("Gradient descent is unstable at the smallest trial step", {'epsilon': epsilon})
    for _ in range(settings.STEP_SEARCH_MAX_DOUBLINGS):
        if not stable(2.0 * epsilon):
            break
        epsilon *= 2.0
    logger.info(f"Largest stable gradient descent step for {f.name}: {epsilon:.6g}")
    return epsilon


def _reached(record: TrajectoryRecord, stop: StopCriteria) -> Optional[str]:
    if stop.subopt_tol is not None and record.subopt <= stop.subopt_tol:
        return "subopt_tol"
    if stop.grad_tol is not None and record.grad_norm <= stop.grad_tol:
        return "grad_tol"
    return None
