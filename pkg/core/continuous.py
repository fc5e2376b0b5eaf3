"""
Continuous-time conformal Hamiltonian dynamics and the one-dimensional power system

    x' = |p|^(a-1) sgn(p),    p' = -|x|^(b-1) sgn(x) - gamma p

used to exhibit the linear/sublinear dichotomy: trapping regions, shooting for the
exceptional starting point eta, and empirical rate fits.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from config import get_lower_bound_config, get_ode_config
from core.integrators import State, hamiltonian
from core.objective import ObjectiveSpec
from utils.exceptions import ClassificationError, DomainError, StiffnessError
from utils.logging import get_logger
from utils.numerics import fit_line

logger = get_logger('continuous')


@dataclass
class OdeConfig:
    t_end: float
    rel_tol: Optional[float] = None
    abs_tol: Optional[float] = None
    max_step: float = math.inf
    samples: Optional[int] = None  # uniform output grid; solver steps when None
    t_eval: Optional[Sequence[float]] = None
    h_floor: Optional[float] = None  # stop once H falls below this value

    def __post_init__(self):
        settings = get_ode_config()
        self.rel_tol = settings.REL_TOL if self.rel_tol is None else self.rel_tol
        self.abs_tol = settings.ABS_TOL if self.abs_tol is None else self.abs_tol
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise DomainError("ODE tolerances must be positive",
                              {'rel_tol': self.rel_tol, 'abs_tol': self.abs_tol})
        if not self.t_end >= 0.0:
            raise DomainError(f"t_end must be non-negative, got {self.t_end}")
        if not self.max_step > 0.0:
            raise DomainError(f"max_step must be positive, got {self.max_step}")

    def output_grid(self) -> Optional[np.ndarray]:
        if self.t_eval is not None:
            return np.asarray(self.t_eval, dtype=float)
        if self.samples is not None:
            return np.linspace(0.0, self.t_end, max(int(self.samples), 2))
        return None


@dataclass
class ContinuousTrajectory:
    """Samples t_k with positions, momenta and energy; status names what ended the run."""
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    H: np.ndarray
    status: str = "completed"

    def max_energy_increase(self) -> float:
        if self.H.size < 2:
            return 0.0
        return float(np.max(np.diff(self.H), initial=0.0))


def _solve(fun: Callable, y0: np.ndarray, t_end: float, rel_tol: float, abs_tol: float,
           t_eval: Optional[np.ndarray] = None, events: Sequence[Callable] = (),
           max_step: float = math.inf):
    solution = integrate.solve_ivp(fun, (0.0, t_end), y0, method=get_ode_config().METHOD,
                                   t_eval=t_eval, events=list(events) or None,
                                   rtol=rel_tol, atol=abs_tol, max_step=max_step)
    if solution.status == -1:
        raise StiffnessError(f"ODE integration failed: {solution.message}",
                             {'t_reached': float(solution.t[-1]) if solution.t.size else 0.0})
    return solution


def _terminal(event: Callable, direction: float = 0.0) -> Callable:
    event.terminal = True
    event.direction = direction
    return event


def _with_event_point(solution) -> Tuple[np.ndarray, np.ndarray, str]:
    """Sample arrays, extended by the terminal event point when one fired."""
    t, y = solution.t, solution.y
    if solution.status != 1:
        return t, y, "completed"
    fired = [i for i, times in enumerate(solution.t_events) if len(times)]
    index = fired[0]
    t_hit = solution.t_events[index][-1]
    if t.size == 0 or t[-1] < t_hit:
        t = np.append(t, t_hit)
        y = np.column_stack([y, solution.y_events[index][-1]])
    return t, y, f"event:{index}"


# ----------------------------------------------------------------------------
# General conformal Hamiltonian system
# ----------------------------------------------------------------------------

def ode_field(K, f: ObjectiveSpec, gamma: float, state: State) -> Tuple[np.ndarray, np.ndarray]:
    """(grad k(p), -grad f(x) - gamma p)."""
    return K.grad(state.p), -f.gradient(state.x) - gamma * state.p


def simulate(K, f: ObjectiveSpec, gamma: float, state0: State, cfg: OdeConfig) -> ContinuousTrajectory:
    """Adaptive Runge-Kutta 5(4) solution of the conformal Hamiltonian system."""
    dim = f.dim
    x0 = np.asarray(state0.x, dtype=float)
    p0 = np.asarray(state0.p, dtype=float)
    H0 = hamiltonian(K, f, x0, p0)

    if cfg.t_end == 0.0:
        return ContinuousTrajectory(np.zeros(1), x0[None, :].copy(), p0[None, :].copy(), np.array([H0]))

    def fun(t, y):
        velocity, force = ode_field(K, f, gamma, State(y[:dim], y[dim:]))
        return np.concatenate((velocity, force))

    events = []
    if cfg.h_floor is not None:
        floor = cfg.h_floor
        events.append(_terminal(lambda t, y: hamiltonian(K, f, y[:dim], y[dim:]) - floor, -1.0))

    solution = _solve(fun, np.concatenate((x0, p0)), cfg.t_end, cfg.rel_tol, cfg.abs_tol,
                      cfg.output_grid(), events, cfg.max_step)
    t, y, status = _with_event_point(solution)
    if status != "completed":
        status = "h_floor"

    xs, ps = y[:dim].T.copy(), y[dim:].T.copy()
    H = np.array([hamiltonian(K, f, x, p) for x, p in zip(xs, ps)])
    trajectory = ContinuousTrajectory(t, xs, ps, H, status)

    slack = get_ode_config().ENERGY_SLACK * (1.0 + H0)
    if trajectory.max_energy_increase() > slack:
        logger.warning(f"Energy increased by {trajectory.max_energy_increase():.3e} along the trajectory")
    logger.debug(f"Simulated {f.name} to t={t[-1]:.6g} with {t.size} samples ({status})")
    return trajectory


# ----------------------------------------------------------------------------
# Lower-bound system
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundProblem:
    a: float
    b: float
    gamma: float

    def __post_init__(self):
        if not (self.a > 1.0 and self.b > 1.0):
            raise DomainError("Lower-bound exponents must exceed 1", {'a': self.a, 'b': self.b})
        if not self.gamma > 0.0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")

    @property
    def sublinear_regime(self) -> bool:
        return 1.0 / self.a + 1.0 / self.b < 1.0

    @property
    def predicted_exponent(self) -> float:
        """Sublinear decay |x_t| ~ t^(-1/(ba - b - a))."""
        if not self.sublinear_regime:
            raise DomainError("Convergence is linear when 1/a + 1/b >= 1", {'a': self.a, 'b': self.b})
        return 1.0 / (self.b * self.a - self.b - self.a)

    @property
    def fast_rate(self) -> float:
        """Exponential rate gamma(a - 1) of the exceptional path."""
        return self.gamma * (self.a - 1.0)

    def trapping_levels(self) -> Tuple[float, ...]:
        return tuple(factor / self.gamma for factor in get_lower_bound_config().TRAPPING_FACTORS)

    def energy(self, x: float, p: float) -> float:
        return abs(p) ** self.a / self.a + abs(x) ** self.b / self.b


class Classification(str, Enum):
    SLOW = "slow"
    CROSS = "cross"


@dataclass(frozen=True)
class EtaEstimate:
    eta: float
    lower: float
    upper: float
    evaluations: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {'eta': self.eta, 'lower': self.lower, 'upper': self.upper,
                'width': self.width, 'evaluations': self.evaluations}


@dataclass(frozen=True)
class RateFit:
    kind: str  # "linear" or "sublinear"
    rate: float  # -slope of log|x| against t
    power: float  # -slope of log|x| against log t
    fit_r2: float
    linear_r2: float = 0.0
    sublinear_r2: float = 0.0
    n_points: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class TrappingReport:
    invariant: bool
    first_violation: Optional[float] = None
    samples: int = 0


def power_ode_field(prob: LowerBoundProblem, state: Tuple[float, float]) -> Tuple[float, float]:
    """(|p|^(a-1) sgn p, -|x|^(b-1) sgn x - gamma p)."""
    x, p = float(state[0]), float(state[1])
    dx = math.copysign(abs(p) ** (prob.a - 1.0), p) if p != 0.0 else 0.0
    dp = -(math.copysign(abs(x) ** (prob.b - 1.0), x) if x != 0.0 else 0.0) - prob.gamma * p
    return dx, dp


def _origin_event(cutoff: float) -> Callable:
    return _terminal(lambda t, y: max(abs(y[0]), abs(y[1])) - cutoff, -1.0)


def simulate_power(prob: LowerBoundProblem, state0: Tuple[float, float], cfg: OdeConfig,
                   events: Sequence[Callable] = ()) -> ContinuousTrajectory:
    """
    Integrate the power system; the run halts near the non-Lipschitz origin.

    Extra terminal events are tried before the origin cutoff; the status reports
    ``event:<index>`` into ``events``, ``origin`` or ``completed``.
    """
    settings = get_lower_bound_config()
    x0, p0 = float(state0[0]), float(state0[1])
    if cfg.t_end == 0.0:
        return ContinuousTrajectory(np.zeros(1), np.array([[x0]]), np.array([[p0]]),
                                    np.array([prob.energy(x0, p0)]))

    all_events = list(events) + [_origin_event(settings.ORIGIN_CUTOFF)]
    solution = _solve(lambda t, y: power_ode_field(prob, y), np.array([x0, p0]), cfg.t_end,
                      cfg.rel_tol, cfg.abs_tol, cfg.output_grid(), all_events, cfg.max_step)
    t, y, status = _with_event_point(solution)
    if status == f"event:{len(events)}":
        status = "origin"

    H = np.array([prob.energy(x, p) for x, p in y.T])
    return ContinuousTrajectory(t, y[0][:, None].copy(), y[1][:, None].copy(), H, status)


def xi(prob: LowerBoundProblem, A: float) -> float:
    """Width xi(A) = ((gamma A - 1) / ((b - 1) A^a))^(1/(ba - b - a)) of the trapping region."""
    exponent = prob.predicted_exponent
    if not A > 1.0 / prob.gamma:
        raise DomainError(f"Trapping level A must exceed 1/gamma, got {A}", {'gamma': prob.gamma})
    return ((prob.gamma * A - 1.0) / ((prob.b - 1.0) * A ** prob.a)) ** exponent


def in_trapping_region(prob: LowerBoundProblem, A: float, state: Tuple[float, float]) -> bool:
    """0 < x < xi(A) and -A x^(b-1) < p < 0."""
    x, p = float(state[0]), float(state[1])
    return 0.0 < x < xi(prob, A) and -A * x ** (prob.b - 1.0) < p < 0.0


def trapping_forward_invariance_check(prob: LowerBoundProblem, A: float, state0: Tuple[float, float],
                                      horizon: float) -> TrappingReport:
    """Simulate from a point of R_A and report the first sample that leaves it."""
    if not in_trapping_region(prob, A, state0):
        raise DomainError("Initial state is not in the trapping region", {'A': A, 'state': tuple(state0)})
    if horizon == 0.0:
        return TrappingReport(invariant=True, samples=1)

    settings = get_lower_bound_config()
    trajectory = simulate_power(prob, state0, OdeConfig(horizon, settings.CLASSIFY_REL_TOL,
                                                        settings.CLASSIFY_ABS_TOL))
    for t, x, p in zip(trajectory.t, trajectory.x[:, 0], trajectory.p[:, 0]):
        if not in_trapping_region(prob, A, (x, p)):
            if trajectory.status == "origin" and t == trajectory.t[-1]:
                break
            return TrappingReport(invariant=False, first_violation=float(t), samples=trajectory.t.size)
    return TrappingReport(invariant=True, samples=trajectory.t.size)


def _classification_events(prob: LowerBoundProblem) -> List[Callable]:
    events = []
    for A in prob.trapping_levels():
        width = xi(prob, A)
        events.append(_terminal(
            lambda t, y, A=A, width=width: min(y[0], width - y[0],
                                               y[1] + A * abs(y[0]) ** (prob.b - 1.0), -y[1]),
            1.0))
    events.append(_terminal(lambda t, y: y[1], 1.0))
    return events


def _classify_once(prob: LowerBoundProblem, theta: float, rel_tol: float, abs_tol: float,
                   horizon: float) -> Classification:
    events = _classification_events(prob)
    trajectory = simulate_power(prob, (theta, 0.0), OdeConfig(horizon, rel_tol, abs_tol), events)
    if trajectory.status.startswith("event:"):
        index = int(trajectory.status.split(":")[1])
        return Classification.CROSS if index == len(events) - 1 else Classification.SLOW
    raise ClassificationError("Neither a trapping region nor an axis crossing was reached",
                              {'theta': theta, 'status': trajectory.status, 'horizon': horizon})


def classify_start(prob: LowerBoundProblem, theta: float, rel_tol: Optional[float] = None,
                   abs_tol: Optional[float] = None) -> Classification:
    """
    SLOW if the path from (theta, 0) enters a trapping region, CROSS if p returns
    to zero on the far side of the origin. The label must survive halving the tolerances.

    The field is odd in (x, p), so (-theta, 0) gets the label of its mirror image.
    """
    if theta == 0.0:
        raise DomainError("The origin is a rest point and has no classification")
    theta = abs(theta)
    settings = get_lower_bound_config()
    rel_tol = rel_tol or settings.CLASSIFY_REL_TOL
    abs_tol = abs_tol or settings.CLASSIFY_ABS_TOL
    horizon = settings.CLASSIFICATION_HORIZON

    label = _classify_once(prob, theta, rel_tol, abs_tol, horizon)
    for _ in range(settings.CLASSIFY_RETRIES + 1):
        rel_tol, abs_tol = 0.5 * rel_tol, 0.5 * abs_tol
        check = _classify_once(prob, theta, rel_tol, abs_tol, horizon)
        if check is label:
            return label
        label = check
    raise ClassificationError("Classification changes under tolerance halving", {'theta': theta})


def shoot_eta(prob: LowerBoundProblem, search_interval: Optional[Tuple[float, float]] = None,
              tol: Optional[float] = None,
              should_stop: Optional[Callable[[], bool]] = None) -> EtaEstimate:
    """Bisect over starts (theta, 0) for the boundary between SLOW and CROSS paths."""
    settings = get_lower_bound_config()
    tol = settings.ETA_TOL if tol is None else tol
    if not prob.sublinear_regime:
        raise DomainError("Shooting for eta needs 1/a + 1/b < 1", {'a': prob.a, 'b': prob.b})

    evaluations = 0
    if search_interval is None:
        lower = 0.5 * min(xi(prob, A) for A in prob.trapping_levels())
        upper = settings.ETA_UPPER_START
    else:
        lower, upper = (float(v) for v in search_interval)

    if classify_start(prob, lower) is not Classification.SLOW:
        raise ClassificationError("Lower end of the search interval does not converge slowly", {'theta': lower})
    evaluations += 1

    for _ in range(settings.MAX_DOUBLINGS):
        evaluations += 1
        label = classify_start(prob, upper)
        if label is Classification.CROSS:
            break
        lower, upper = upper, 2.0 * upper
    else:
        raise ClassificationError("No crossing start found while growing the search interval", {'upper': upper})

    for _ in range(settings.MAX_BISECTIONS):
        if upper - lower <= tol * lower:
            break
        if should_stop is not None and should_stop():
            break
        middle = 0.5 * (lower + upper)
        evaluations += 1
        if classify_start(prob, middle) is Classification.SLOW:
            lower = middle
        else:
            upper = middle

    estimate = EtaEstimate(eta=0.5 * (lower + upper), lower=lower, upper=upper, evaluations=evaluations)
    logger.info(f"eta = {estimate.eta:.12g} (bracket width {estimate.width:.3e}, {evaluations} classifications)")
    return estimate


def fit_rate(t: Sequence[float], abs_x: Sequence[float],
             window: Optional[Tuple[float, float]] = None) -> RateFit:
    """Fit log|x| against t and against log t; the better R^2 names the regime."""
    t = np.asarray(t, dtype=float)
    abs_x = np.abs(np.asarray(abs_x, dtype=float))
    mask = (abs_x > 0.0) & (t > 0.0)
    if window is not None:
        mask &= (t >= window[0]) & (t <= window[1])
    if np.count_nonzero(mask) < 3:
        raise DomainError("Degenerate window for a rate fit", {'points': int(np.count_nonzero(mask))})

    t, log_x = t[mask], np.log(abs_x[mask])
    linear = fit_line(t, log_x)
    sublinear = fit_line(np.log(t), log_x)
    kind, r2 = ("linear", linear.r2) if linear.r2 >= sublinear.r2 else ("sublinear", sublinear.r2)
    return RateFit(kind=kind, rate=-linear.slope, power=-sublinear.slope, fit_r2=r2,
                   linear_r2=linear.r2, sublinear_r2=sublinear.r2, n_points=int(t.size))


def generic_rate(prob: LowerBoundProblem, theta: Optional[float] = None,
                 window: Optional[Tuple[float, float]] = None) -> RateFit:
    """Rate fit for a typical start (theta, 0) over a late time window."""
    settings = get_lower_bound_config()
    theta = settings.GENERIC_START if theta is None else theta
    window = settings.GENERIC_WINDOW if window is None else window
    grid = np.concatenate(([0.0], np.geomspace(window[0], window[1], settings.GENERIC_SAMPLES)))
    trajectory = simulate_power(prob, (theta, 0.0),
                                OdeConfig(window[1], settings.CLASSIFY_REL_TOL, settings.CLASSIFY_ABS_TOL,
                                          t_eval=grid))
    return fit_rate(trajectory.t, trajectory.x[:, 0], window)


def eta_rate(prob: LowerBoundProblem, estimate: EtaEstimate) -> Tuple[RateFit, ContinuousTrajectory]:
    """
    Rate fit along the path from (eta, 0), restricted to the window where |x| has dropped
    below a fraction of eta but stays well above the bracket width.
    """
    settings = get_lower_bound_config()
    horizon = 2.0 * math.log(estimate.eta / estimate.width) / prob.fast_rate + 10.0
    trajectory = simulate_power(prob, (estimate.eta, 0.0),
                                OdeConfig(horizon, settings.CLASSIFY_REL_TOL, settings.CLASSIFY_ABS_TOL,
                                          samples=settings.FAST_SAMPLES))

    abs_x = np.abs(trajectory.x[:, 0])
    upper = settings.FAST_WINDOW_START * estimate.eta
    lower = settings.FAST_WINDOW_COLLAPSE * estimate.width
    inside = np.flatnonzero(abs_x <= upper)
    if inside.size == 0:
        raise DomainError("The path from eta never enters the fit window", {'eta': estimate.eta})
    start = inside[0]
    collapsed = np.flatnonzero(abs_x[start:] < lower)
    stop = start + (collapsed[0] if collapsed.size else abs_x.size - start)
    window = (float(trajectory.t[start]), float(trajectory.t[stop - 1]))
    return fit_rate(trajectory.t, abs_x, window), trajectory


def phase_sweep(prob: LowerBoundProblem, thetas: Sequence[float],
                cfg: Optional[OdeConfig] = None) -> List[Tuple[float, ContinuousTrajectory]]:
    """Phase-portrait samples of the paths from (theta, 0) for each theta."""
    settings = get_lower_bound_config()
    cfg = cfg or OdeConfig(settings.SWEEP_T_END, settings.CLASSIFY_REL_TOL, settings.CLASSIFY_ABS_TOL,
                           samples=500)
    return [(float(theta), simulate_power(prob, (theta, 0.0), cfg)) for theta in thetas]
